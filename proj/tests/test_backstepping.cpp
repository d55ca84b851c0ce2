#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "core/backstepping.hpp"
#include "core/certificate.hpp"
#include "core/errors.hpp"
#include "core/registry.hpp"
#include "core/rng.hpp"
#include "core/sampling.hpp"

using namespace synckit;

namespace {

const Example& strict_example() { return find_example("planar-sine-strict"); }

ASubCertificate base_certificate() {
  const Example& ex = strict_example();
  ASubCertificate a;
  a.cert = ex.cert;
  a.box = ex.box;
  a.Q = ex.Q;
  a.grad_alpha = ex.grad_alpha;
  a.constant_metric = ex.constant_metric;
  return a;
}

SampleSet base_samples(int per_axis = 13) {
  const Example& ex = strict_example();
  SampleSet s = SampleSet::grid(ex.box, per_axis);
  s.add_random(100, 21);
  return s;
}

SampleSet augmented_samples(const Box& box, int per_axis = 9) {
  SampleSet s = SampleSet::grid(box, per_axis);
  s.add_random(200, 22);
  return s;
}

// Recompute the shear vector S(z) = grad q_a^T z_b + eta alpha_a P_a g_a
// independently of the construction under test.
Eigen::VectorXd shear(const StrictFeedbackSystem& sfs, const MetricCertificate& cert_a,
                      double eta, const Eigen::VectorXd& z) {
  const Eigen::VectorXd za = z.head(sfs.na);
  const double zb = z[sfs.na];
  return sfs.grad_q_a(za).transpose() * zb +
         eta * cert_a.alpha(za)[0] * (cert_a.P(za) * sfs.g_a(za));
}

}  // namespace

TEST_CASE("eta selection") {
  const Example& ex = strict_example();
  SUBCASE("the planar benchmark has alpha q identically one") {
    // rho_a = 4, so the floor is 2 and the safety factor lands on 2.2.
    const double eta = choose_eta(base_certificate(), *ex.strict, base_samples());
    CHECK(eta == doctest::Approx(2.2).epsilon(1e-12));
  }
  SUBCASE("scales with the product bound") {
    ASubCertificate a = base_certificate();
    a.cert.rho = 1.0;
    StrictFeedbackSystem sfs = *ex.strict;
    const ScalarFn q = sfs.q_a;
    sfs.q_a = [q](const Eigen::VectorXd& z) { return 2.0 * q(z); };  // alpha q == 2
    const double eta = choose_eta(a, sfs, base_samples());
    CHECK(eta == doctest::Approx(1.1).epsilon(1e-12));
  }
  SUBCASE("rejects a nonpositive coefficient") {
    ASubCertificate a = base_certificate();
    a.cert.rho = 0.0;
    CHECK_THROWS_AS(choose_eta(a, *ex.strict, base_samples()), Error);
  }
  SUBCASE("rejects a sign-violating product") {
    StrictFeedbackSystem sfs = *ex.strict;
    sfs.q_a = [](const Eigen::VectorXd&) { return -1.0; };
    CHECK_THROWS_AS(choose_eta(base_certificate(), sfs, base_samples()), Error);
  }
}

TEST_CASE("augmented tensor at the origin with unit eta") {
  const Example& ex = strict_example();
  const AugmentedCertificate aug = augment_certificate(base_certificate(), *ex.strict, 1.0, 1.0);
  // grad q_a(0) = (1,0), alpha(0) = 1/2, P_a g_a(0) = (2,4), q_a(0) = 2:
  // S = (1,2) and the block formula fills in integer entries.
  Eigen::MatrixXd expected(3, 3);
  expected << 3, 3, 2, 3, 6, 4, 2, 4, 4;
  const Eigen::MatrixXd Pb = aug.cert.P(Eigen::VectorXd::Zero(3));
  CHECK((Pb - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(aug.cert.dim == 3);
  CHECK(aug.eta == 1.0);
}

TEST_CASE("augmented scalar fields follow the construction") {
  const Example& ex = strict_example();
  const double eta = 2.2;
  const AugmentedCertificate aug = augment_certificate(base_certificate(), *ex.strict, eta, 1.0);
  Eigen::VectorXd z(3);
  z << 0.5, -0.3, 0.7;
  const double qa = 2.0 + std::sin(z[0]);
  // U_b = eta U_a + q_a z_b with U_a = z1 + 2 z2.
  CHECK(aug.cert.U(z) ==
        doctest::Approx(eta * (z[0] + 2.0 * z[1]) + qa * z[2]).epsilon(1e-15));
  // alpha_b = 1/(q_a g_b) with g_b = 1; q_b = q_a g_b.
  CHECK(aug.cert.alpha(z)[0] == doctest::Approx(1.0 / qa).epsilon(1e-15));
  CHECK(aug.q(z) == doctest::Approx(qa).epsilon(1e-15));
  // grad U_b = (eta grad U_a + z_b grad q_a, q_a).
  const Eigen::RowVectorXd grad = aug.cert.grad_U(z);
  CHECK(grad[0] == doctest::Approx(eta + z[2] * std::cos(z[0])).epsilon(1e-15));
  CHECK(grad[1] == doctest::Approx(2.0 * eta).epsilon(1e-15));
  CHECK(grad[2] == doctest::Approx(qa).epsilon(1e-15));
  // Composite drift stacks the interconnection.
  const Eigen::VectorXd f = aug.system.f(z);
  REQUIRE(f.size() == 3);
  CHECK(f[0] == doctest::Approx(-z[0] + std::sin(z[1]) * std::cos(z[0]) + z[1]).epsilon(1e-15));
  CHECK(f[1] == doctest::Approx(qa * z[2]).epsilon(1e-15));
  CHECK(f[2] == 0.0);
  const Eigen::MatrixXd g = aug.system.g(z);
  CHECK(g(0, 0) == 0.0);
  CHECK(g(1, 0) == 0.0);
  CHECK(g(2, 0) == 1.0);
}

TEST_CASE("augmented tensor keeps the rank-one block identity") {
  const Example& ex = strict_example();
  const double eta = choose_eta(base_certificate(), *ex.strict, base_samples());
  const AugmentedCertificate aug = augment_certificate(base_certificate(), *ex.strict, eta, 1.0);
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd z(3);
    z << rng.uniform(-M_PI, M_PI), rng.uniform(-M_PI, M_PI), rng.uniform(-1.0, 1.0);
    const Eigen::VectorXd S = shear(*ex.strict, base_certificate().cert, eta, z);
    const double qa = ex.strict->q_a(z.head(2));
    Eigen::VectorXd col(3);
    col << S[0], S[1], qa;
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
    expected.topLeftCorner(2, 2) = base_certificate().cert.P(z.head(2));
    expected += col * col.transpose();
    CHECK((aug.cert.P(z) - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("construction rejects invalid parameters") {
  const Example& ex = strict_example();
  CHECK_THROWS_AS(augment_certificate(base_certificate(), *ex.strict, 2.2, 0.0), Error);
  CHECK_THROWS_AS(augment_certificate(base_certificate(), *ex.strict, 2.2, -1.0), Error);
  CHECK_THROWS_AS(augment_certificate(base_certificate(), *ex.strict, 0.0, 1.0), Error);
  StrictFeedbackSystem no_grad = *ex.strict;
  no_grad.grad_q_a = nullptr;
  CHECK_THROWS_AS(augment_certificate(base_certificate(), no_grad, 2.2, 1.0), Error);
}

TEST_CASE("augmented integrability is exact by construction") {
  const Example& ex = strict_example();
  for (double eta : {1.0, 2.2, 5.0}) {
    AugmentedCertificate aug = augment_certificate(base_certificate(), *ex.strict, eta, 1.0);
    const VerificationReport report =
        check_integrability(aug.system, aug.cert, augmented_samples(aug.box), 1e-10);
    CHECK(report.pass);
    CHECK(report.worst_margin <= 1e-12);
  }
}

TEST_CASE("full verification of the planar strict-feedback benchmark") {
  const Example& ex = strict_example();
  const double eta = choose_eta(base_certificate(), *ex.strict, base_samples());
  AugmentedCertificate aug = augment_certificate(base_certificate(), *ex.strict, eta, 1.0);
  const SampleSet samples = augmented_samples(aug.box);
  const AugmentedVerification v = verify_augmented(aug, *ex.strict, samples);
  CHECK(v.pass);
  CHECK(v.bounds.report.pass);
  CHECK(v.bounds.p_lower_est > 0.0);
  CHECK(v.integrability.pass);
  CHECK(v.killing.pass);
  CHECK(v.killing.worst_margin <= 1e-9);  // analytic path: exact cancellation
  CHECK(v.input_bounds.pass);
  CHECK(v.kernel.pass);
  CHECK(v.strengthened.pass);
  CHECK(v.epsilon > 0.0);
  CHECK(v.rho_b > 0.0);
  // Stamped back for downstream gain synthesis.
  CHECK(aug.cert.rho == v.rho_b);
  CHECK(aug.cert.q_margin == v.epsilon);
}

TEST_CASE("verification margins grow with eta") {
  const Example& ex = strict_example();
  const double eta = choose_eta(base_certificate(), *ex.strict, base_samples());
  AugmentedCertificate tight = augment_certificate(base_certificate(), *ex.strict, eta, 1.0);
  AugmentedCertificate slack = augment_certificate(base_certificate(), *ex.strict, 2 * eta, 1.0);
  const SampleSet samples = augmented_samples(tight.box, 7);
  CHECK(verify_augmented(tight, *ex.strict, samples).pass);
  CHECK(verify_augmented(slack, *ex.strict, samples).pass);
}

TEST_CASE("an eta far below the floor breaks the kernel contraction") {
  // The floor is a sufficient condition: moderately undershooting it still
  // verifies because the rho ladder compensates. An eighth of the floor does
  // not, and the refusal names the kernel stage.
  const Example& ex = strict_example();
  const double eta = choose_eta(base_certificate(), *ex.strict, base_samples());
  AugmentedCertificate aug =
      augment_certificate(base_certificate(), *ex.strict, 0.125 * eta, 1.0);
  AugmentedVerification v = verify_augmented(aug, *ex.strict, augmented_samples(aug.box, 7));
  CHECK_FALSE(v.pass);
  CHECK_FALSE(v.kernel.pass);
  CHECK(v.diagnostic.find("kernel") != std::string::npos);
}

TEST_CASE("registry exposes the backstepped benchmark") {
  const Example& ex = find_example("planar-sine-strict-backstepped");
  CHECK(ex.cert.dim == 3);
  CHECK(ex.eta == doctest::Approx(2.2).epsilon(1e-12));
  CHECK(ex.epsilon > 0.0);
  CHECK(ex.cert.rho > 0.0);
  REQUIRE(ex.box.size() == 3);
  CHECK(ex.box[2].lo == -1.0);
  CHECK(ex.box[2].hi == 1.0);
  // The composite keeps an analytic Jacobian for downstream checks.
  CHECK(ex.system.has_analytic_jacobian());
  CHECK(ex.cert.has_analytic_dP());
}

TEST_CASE("analytic augmented tensor derivative matches the flow") {
  const Example& ex = find_example("planar-sine-strict-backstepped");
  REQUIRE(ex.cert.has_analytic_dP());
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd z(3);
    z << rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5), rng.uniform(-0.9, 0.9);
    const Eigen::MatrixXd analytic = ex.cert.dP(ex.system.f(z), z);
    MetricCertificate fd = ex.cert;
    fd.dP = nullptr;
    const Eigen::MatrixXd flow = flow_tensor_derivative(ex.system, fd, z);
    CHECK((analytic - flow).cwiseAbs().maxCoeff() <= 1e-6);
  }
}
