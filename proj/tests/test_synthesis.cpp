#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "core/errors.hpp"
#include "core/graph.hpp"
#include "core/registry.hpp"
#include "core/rng.hpp"
#include "core/sampling.hpp"
#include "core/synthesis.hpp"

using namespace synckit;

namespace {

SampleSet scalar_samples(int per_axis = 41, int random_points = 100) {
  SampleSet s = SampleSet::grid(Box{{-M_PI, M_PI}}, per_axis);
  s.add_random(random_points, 9);
  return s;
}

double lyapunov_residual(const Eigen::MatrixXd& S, const Eigen::MatrixXd& A) {
  const Eigen::MatrixXd R =
      S * A + A.transpose() * S + Eigen::MatrixXd::Identity(A.rows(), A.cols());
  return R.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("Lyapunov margin solver") {
  SUBCASE("scalar") {
    const LyapunovMargin lm = solve_lyapunov_margin(Eigen::MatrixXd::Constant(1, 1, -1.0));
    CHECK(lm.S(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(lm.nu == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("negated identity") {
    const LyapunovMargin lm = solve_lyapunov_margin(-Eigen::MatrixXd::Identity(3, 3));
    CHECK((lm.S - 0.5 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK(lm.nu == doctest::Approx(2.0).epsilon(1e-13));
  }
  SUBCASE("reduced path matrix solves the 3-unknown system") {
    // A = [[-3,1],[0,-1]]: expanding S A + A^T S = -I entrywise gives
    // s11 = 1/6, s12 = 1/24, s22 = 13/24.
    Eigen::MatrixXd A(2, 2);
    A << -3, 1, 0, -1;
    const LyapunovMargin lm = solve_lyapunov_margin(A);
    CHECK(lm.S(0, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(lm.S(0, 1) == doctest::Approx(1.0 / 24.0).epsilon(1e-12));
    CHECK(lm.S(1, 0) == doctest::Approx(1.0 / 24.0).epsilon(1e-12));
    CHECK(lm.S(1, 1) == doctest::Approx(13.0 / 24.0).epsilon(1e-12));
    CHECK(lyapunov_residual(lm.S, A) <= 1e-12);
    // lambda_max(S) = (17 + sqrt(85))/48.
    CHECK(lm.nu == doctest::Approx(48.0 / (17.0 + std::sqrt(85.0))).epsilon(1e-12));
  }
  SUBCASE("self-certification on random stability matrices") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 1 + trial % 5;
      Eigen::MatrixXd R(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R(i, j) = rng.uniform(-1.0, 1.0);
      const Eigen::MatrixXd A = R - (R.cwiseAbs().sum() + 0.5) * Eigen::MatrixXd::Identity(n, n);
      const LyapunovMargin lm = solve_lyapunov_margin(A);
      CHECK(lyapunov_residual(lm.S, A) <= 1e-8);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          lm.S * A + A.transpose() * lm.S + lm.nu * lm.S);
      CHECK(es.eigenvalues().maxCoeff() <= 1e-10);
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(lm.S).eigenvalues().minCoeff() > 0.0);
    }
  }
  SUBCASE("rejects non-stability matrices naming the eigenvalue") {
    CHECK_THROWS_AS(solve_lyapunov_margin(Eigen::MatrixXd::Constant(1, 1, 1.0)), Error);
    Eigen::MatrixXd rotation(2, 2);
    rotation << 0, 1, -1, 0;  // purely imaginary spectrum
    CHECK_THROWS_AS(solve_lyapunov_margin(rotation), Error);
  }
}

TEST_CASE("gain floor is the coefficient ratio") {
  CHECK(local_min_gain(4.0, 2.0) == 2.0);
  CHECK(local_min_gain(1.0, 0.1) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK_THROWS_AS(local_min_gain(0.0, 1.0), Error);
  CHECK_THROWS_AS(local_min_gain(1.0, 0.0), Error);
}

TEST_CASE("local controller") {
  const Example& ex = find_example("scalar-sine");
  SUBCASE("two agents expand to the pairwise law") {
    const CommGraph g = path_graph(2);
    // A = [-2]: S = 1/4, nu = 4, floor = rho/nu = 1.
    const SyncController ctrl = make_local_controller(g, ex.cert);
    CHECK(ctrl.gain.ell_min == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ctrl.gain.gain == doctest::Approx(1.25).epsilon(1e-12));
    const double l = ctrl.gain.gain;
    Eigen::VectorXd x(2);
    x << 0.7, -0.4;
    const Eigen::VectorXd u = ctrl.phi(x);
    // alpha = 1, U = z: phi_1 = -l (U(x1) - U(x2)), phi_2 the mirror image.
    CHECK(u[0] == doctest::Approx(-l * (x[0] - x[1])).epsilon(1e-14));
    CHECK(u[1] == doctest::Approx(-l * (x[1] - x[0])).epsilon(1e-14));
  }
  SUBCASE("vanishes exactly on the synchronization manifold") {
    const SyncController ctrl = make_local_controller(ring_graph(4), ex.cert);
    for (double z : {-2.0, 0.0, 0.31, 2.9}) {
      const Eigen::VectorXd x = Eigen::VectorXd::Constant(4, z);
      CHECK(ctrl.phi(x).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("below-floor gains need the override flag") {
    CHECK_THROWS_AS(make_local_controller(path_graph(2), ex.cert, 0.5), Error);
    const SyncController forced =
        make_local_controller(path_graph(2), ex.cert, 0.5, kGainSafety, true);
    CHECK(forced.gain.gain == 0.5);
    CHECK(forced.gain.overridden);
  }
  SUBCASE("disconnected graphs are refused") {
    CHECK_THROWS_AS(make_local_controller(build_graph(4, {{1, 2}, {3, 4}}), ex.cert), Error);
  }
  SUBCASE("on-manifold Jacobian is the Laplacian Kronecker block") {
    const CommGraph g = path_graph(3);
    const SyncController ctrl = make_local_controller(g, ex.cert);
    const double l = ctrl.gain.gain;
    Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 0.4);
    const Eigen::MatrixXd jac = fd_jacobian(ctrl.phi, x, 1e-5);
    // alpha(z) dU/dz = 1, so the block form collapses to -l L.
    const Eigen::MatrixXd expected = -l * g.laplacian();
    CHECK((jac - expected).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("global controller") {
  const Example& ex = find_example("scalar-sine");
  const CommGraph ring = ring_graph(3);
  const CouplingMatrix coupling = find_c1(ring);
  const SampleSet samples = scalar_samples();
  // Triangle at c1 = 1: A + A^T = -6 I, so mu = 6.
  REQUIRE(coupling.mu == doctest::Approx(6.0).epsilon(1e-12));

  SUBCASE("minimum gain matches the pointwise bound") {
    // Block check: 2 cos z - 2 l mu + 2 <= 0 tightest at cos z = 1, so
    // l_min = 2/mu = 1/3.
    const double lmin =
        global_min_gain(ex.P0, ex.G0, ex.system, samples, ex.Q, coupling.mu);
    CHECK(lmin == doctest::Approx(1.0 / 3.0).epsilon(2e-3));
    const SyncController ctrl = make_global_controller(ex.P0, ex.G0, ring, ex.system, samples,
                                                       ex.Q, coupling);
    CHECK(ctrl.gain.gain == doctest::Approx(1.25 * lmin).epsilon(1e-12));
    CHECK(ctrl.gain.mu == coupling.mu);
    CHECK(ctrl.weights[0] == coupling.c1);
    CHECK(ctrl.weights[1] == 1.0);
  }
  SUBCASE("the block check is monotone in the gain") {
    CHECK_FALSE(global_block_check(ex.P0, ex.G0, ex.system, samples, ex.Q, coupling.mu,
                                   0.3).pass);
    CHECK(global_block_check(ex.P0, ex.G0, ex.system, samples, ex.Q, coupling.mu, 0.34).pass);
    CHECK(global_block_check(ex.P0, ex.G0, ex.system, samples, ex.Q, coupling.mu, 0.68).pass);
  }
  SUBCASE("evaluates the linear diffusive law") {
    const SyncController ctrl = make_global_controller(ex.P0, ex.G0, ring, ex.system, samples,
                                                       ex.Q, coupling);
    const double l = ctrl.gain.gain;
    Eigen::VectorXd x(3);
    x << 1.0, -2.0, 0.5;
    const Eigen::VectorXd u = ctrl.phi(x);
    const Eigen::MatrixXd L = ring.laplacian();
    for (int i = 0; i < 3; ++i) {
      // G^T P = 1 for the scalar benchmark.
      CHECK(u[i] == doctest::Approx(-l * ctrl.weights[i] * (L.row(i) * x)(0)).epsilon(1e-13));
    }
    for (double z : {-1.0, 0.2, 3.0}) {
      CHECK(ctrl.phi(Eigen::VectorXd::Constant(3, z)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("an insufficient explicit gain is refused unless overridden") {
    CHECK_THROWS_AS(make_global_controller(ex.P0, ex.G0, ring, ex.system, samples, ex.Q,
                                           coupling, 0.1),
                    Error);
    const SyncController forced = make_global_controller(ex.P0, ex.G0, ring, ex.system, samples,
                                                         ex.Q, coupling, 0.1, kGainSafety, true);
    CHECK(forced.gain.overridden);
  }
  SUBCASE("a vanished definiteness margin is refused") {
    CouplingMatrix flat = coupling;
    flat.mu = 0.0;
    CHECK_THROWS_AS(make_global_controller(ex.P0, ex.G0, ring, ex.system, samples, ex.Q, flat),
                    Error);
  }
}

TEST_CASE("global gain for the rotational benchmark") {
  // P A + A^T P = [[-2,0],[0,2]] and P G G^T P = [[1,2],[2,4]]; with
  // Q = I/2 the 2x2 eigenvalue condition gives l mu >= 15/28.
  const Example& ex = find_example("linear-rotation");
  const CommGraph ring = ring_graph(3);
  const CouplingMatrix coupling = find_c1(ring);
  SampleSet samples = SampleSet::grid(ex.box, 5);
  const double lmin =
      global_min_gain(ex.P0, ex.G0, ex.system, samples, ex.Q, coupling.mu);
  CHECK(lmin == doctest::Approx(15.0 / 28.0 / coupling.mu).epsilon(2e-3));
}

TEST_CASE("structural checks") {
  const Example& ex = find_example("scalar-sine");
  SUBCASE("locality margin is exactly zero for the diffusive law") {
    const SyncController ctrl = make_local_controller(path_graph(3), ex.cert);
    SampleSet probes = SampleSet::grid(Box{{-2, 2}}, 5);
    const StructuralReport report = structural_checks(ctrl, path_graph(3), probes);
    CHECK(report.pass);
    CHECK(report.locality.worst_margin == 0.0);
    CHECK(report.manifold_zero.worst_margin == 0.0);
  }
  SUBCASE("probe budget is honoured") {
    const SyncController ctrl = make_local_controller(path_graph(3), ex.cert);
    SampleSet probes = SampleSet::grid(Box{{-2, 2}}, 7);
    const StructuralReport report = structural_checks(ctrl, path_graph(3), probes, 1e-7,
                                                      1e-12, 3);
    // Path on 3 nodes has one non-adjacent pair, checked in both directions.
    CHECK(report.locality.samples_checked == 6);
  }
  SUBCASE("complete graphs impose no sparsity constraint") {
    const SyncController ctrl = make_local_controller(complete_graph(3), ex.cert);
    SampleSet probes = SampleSet::grid(Box{{-2, 2}}, 3);
    const StructuralReport report = structural_checks(ctrl, complete_graph(3), probes);
    CHECK(report.pass);
    CHECK(report.locality.samples_checked == 1);
  }
  SUBCASE("global law stays on the graph sparsity pattern") {
    const CommGraph ring = ring_graph(4);
    const CouplingMatrix coupling = find_c1(ring);
    const SampleSet samples = scalar_samples(21, 0);
    const SyncController ctrl = make_global_controller(ex.P0, ex.G0, ring, ex.system, samples,
                                                       ex.Q, coupling);
    SampleSet probes = SampleSet::grid(Box{{-2, 2}}, 3);
    probes.add_random(100, 17);
    const StructuralReport report = structural_checks(ctrl, ring, probes, 1e-7, 1e-12, 5);
    CHECK(report.pass);
  }
}
