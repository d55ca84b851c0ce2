#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "core/errors.hpp"
#include "core/graph.hpp"
#include "core/registry.hpp"
#include "core/rng.hpp"
#include "core/simulate.hpp"
#include "core/synthesis.hpp"

using namespace synckit;

namespace {

// Uncontrolled scalar agents: provides dynamics while the coupling gain is
// forced to zero.
SyncController zero_gain_controller(const CommGraph& g) {
  const Example& ex = find_example("scalar-unstable");
  return make_local_controller(g, ex.cert, 0.0, kGainSafety, true);
}

Trace single_sample_trace(int node_count, const Eigen::VectorXd& x) {
  Trace tr;
  tr.node_count = node_count;
  tr.state_dim = static_cast<int>(x.size()) / node_count;
  tr.t = {0.0};
  tr.x = {x};
  tr.dist = {sync_distance(x, tr.node_count, tr.state_dim)};
  tr.norm_e = {transverse_error(x, tr.node_count, tr.state_dim).norm()};
  tr.u_norm = {0.0};
  return tr;
}

}  // namespace

TEST_CASE("distance to the synchronization manifold") {
  SUBCASE("zero on the manifold") {
    Eigen::VectorXd x(6);
    x << 1.5, -2.0, 1.5, -2.0, 1.5, -2.0;
    CHECK(sync_distance(x, 3, 2) == 0.0);
  }
  SUBCASE("two scalar agents") {
    Eigen::VectorXd x(2);
    x << 0.0, 2.0;
    CHECK(sync_distance(x, 2, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  }
  SUBCASE("three scalar agents") {
    Eigen::VectorXd x(3);
    x << 0.0, 0.0, 3.0;
    CHECK(sync_distance(x, 3, 1) == doctest::Approx(std::sqrt(6.0)).epsilon(1e-15));
  }
}

TEST_CASE("transverse error stacks differences to the first agent") {
  Eigen::VectorXd x(6);
  x << 1.0, 2.0, 4.0, 6.0, -1.0, 0.0;
  const Eigen::VectorXd e = transverse_error(x, 3, 2);
  REQUIRE(e.size() == 4);
  CHECK(e[0] == 3.0);
  CHECK(e[1] == 4.0);
  CHECK(e[2] == -2.0);
  CHECK(e[3] == -2.0);
}

TEST_CASE("sandwich inequality holds for arbitrary states") {
  Rng rng(55);
  for (int trial = 0; trial < 500; ++trial) {
    const int N = 2 + static_cast<int>(rng.next_u64() % 9);
    const int n = 1 + static_cast<int>(rng.next_u64() % 3);
    Eigen::VectorXd x(N * n);
    for (int i = 0; i < x.size(); ++i) x[i] = rng.uniform(-10.0, 10.0);
    // Half the trials sit within round-off of the manifold, where the
    // inequality is most delicate.
    if (trial % 2 == 0) {
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) z[i] = rng.uniform(-1.0, 1.0);
      for (int i = 0; i < N; ++i) {
        x.segment(i * n, n) = z + 1e-13 * Eigen::VectorXd::Ones(n) * rng.normal();
      }
    }
    const double d = sync_distance(x, N, n);
    const double e = transverse_error(x, N, n).norm();
    CHECK(d <= e);
    CHECK(e <= std::sqrt(2.0 * (N - 1)) * d + 1e-12);
  }
}

TEST_CASE("integration validates its configuration") {
  const CommGraph g = path_graph(2);
  const SyncController ctrl = zero_gain_controller(g);
  ExperimentConfig cfg;
  cfg.system = find_example("scalar-unstable").system;
  cfg.controller = &ctrl;
  cfg.node_count = 2;
  cfg.x0 = Eigen::VectorXd::Zero(3);  // wrong size
  CHECK_THROWS_AS(integrate(cfg), Error);
  cfg.x0 = Eigen::VectorXd::Zero(2);
  cfg.dt = 0.0;
  CHECK_THROWS_AS(integrate(cfg), Error);
  cfg.dt = 1e-2;
  cfg.T = -1.0;
  CHECK_THROWS_AS(integrate(cfg), Error);
}

TEST_CASE("equilibrium on the manifold is preserved exactly") {
  const Example& ex = find_example("scalar-sine");
  const CommGraph g = ring_graph(3);
  const SyncController ctrl = make_local_controller(g, ex.cert);

  ExperimentConfig cfg;
  cfg.system.state_dim = 1;
  cfg.system.input_dim = 1;
  cfg.system.f = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1).eval(); };
  cfg.system.g = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Ones(1, 1).eval(); };
  cfg.controller = &ctrl;
  cfg.node_count = 3;
  cfg.x0 = Eigen::VectorXd::Constant(3, 0.8);
  cfg.T = 1.0;
  cfg.dt = 1e-2;

  const Trace tr = integrate(cfg);
  for (const Eigen::VectorXd& x : tr.x) {
    CHECK((x - cfg.x0).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("the manifold is invariant under the coupled flow") {
  const Example& ex = find_example("scalar-sine");
  const CommGraph g = path_graph(3);
  const SyncController ctrl = make_local_controller(g, ex.cert);
  ExperimentConfig cfg;
  cfg.system = ex.system;
  cfg.controller = &ctrl;
  cfg.node_count = 3;
  cfg.x0 = Eigen::VectorXd::Constant(3, 0.7);
  cfg.T = 2.0;
  cfg.dt = 1e-2;
  const Trace tr = integrate(cfg);
  CHECK(tr.dist.back() <= 1e-10);
  for (double d : tr.dist) CHECK(d <= 1e-10);
  // The agents genuinely moved.
  CHECK(std::abs(tr.x.back()[0] - 0.7) > 0.1);
}

TEST_CASE("zero coupling leaves unstable agents diverging") {
  const CommGraph g = path_graph(2);
  const SyncController ctrl = zero_gain_controller(g);
  ExperimentConfig cfg;
  cfg.system = find_example("scalar-unstable").system;
  cfg.controller = &ctrl;
  cfg.node_count = 2;
  cfg.x0 = (Eigen::VectorXd(2) << 1.0, 2.0).finished();
  cfg.T = 2.0;
  cfg.dt = 1e-2;
  const Trace tr = integrate(cfg);
  CHECK_FALSE(tr.blew_up);
  // dist(t) = e^t dist(0) for decoupled linear growth.
  CHECK(tr.dist.back() > 5.0 * tr.dist.front());
  const RateFit fit = fit_rate(tr, 0.2, 1.8);
  CHECK(fit.lambda == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("finite escape is reported as data") {
  const CommGraph g = path_graph(2);
  const Example& ex = find_example("scalar-unstable");
  const SyncController ctrl = make_local_controller(g, ex.cert, 0.0, kGainSafety, true);
  ExperimentConfig cfg;
  cfg.system.state_dim = 1;
  cfg.system.input_dim = 1;
  cfg.system.f = [](const Eigen::VectorXd& z) {
    return (Eigen::VectorXd(1) << z[0] * z[0]).finished();
  };
  cfg.system.g = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Ones(1, 1).eval(); };
  cfg.controller = &ctrl;
  cfg.node_count = 2;
  cfg.x0 = (Eigen::VectorXd(2) << 2.0, 2.1).finished();  // escape near t = 1/2
  cfg.T = 1.0;
  cfg.dt = 1e-3;
  const Trace tr = integrate(cfg);
  CHECK(tr.blew_up);
  CHECK(tr.escape_time > 0.3);
  CHECK(tr.escape_time < 0.6);
  for (const Eigen::VectorXd& x : tr.x) CHECK(x.allFinite());
}

TEST_CASE("Lyapunov series for a constant metric") {
  SUBCASE("values") {
    Trace tr = single_sample_trace(2, (Eigen::VectorXd(2) << 0.0, 3.0).finished());
    const double increment = lyapunov_series(tr, Eigen::MatrixXd::Identity(1, 1));
    REQUIRE(tr.V.size() == 1);
    CHECK(tr.V[0] == 9.0);
    CHECK(increment == 0.0);
    Trace flat = single_sample_trace(2, Eigen::VectorXd::Constant(2, 1.3));
    lyapunov_series(flat, Eigen::MatrixXd::Identity(1, 1));
    CHECK(flat.V[0] == 0.0);
  }
  SUBCASE("positive increments are surfaced") {
    Trace tr;
    tr.node_count = 2;
    tr.state_dim = 1;
    for (double v : {3.0, 2.0, 2.5}) {
      tr.t.push_back(tr.t.size() * 1.0);
      tr.x.push_back((Eigen::VectorXd(2) << 0.0, v).finished());
    }
    // V = v^2: 9, 4, 6.25 -> largest positive step is 2.25.
    CHECK(lyapunov_series(tr, Eigen::MatrixXd::Identity(1, 1)) ==
          doctest::Approx(2.25).epsilon(1e-13));
  }
}

TEST_CASE("exponential fit") {
  SUBCASE("recovers an exact log-linear series") {
    std::vector<double> t, y;
    for (int i = 0; i <= 200; ++i) {
      t.push_back(0.01 * i);
      y.push_back(5.0 * std::exp(-2.0 * t.back()));
    }
    const RateFit fit = fit_exponential(t, y, 0.2, 1.8);
    CHECK(fit.lambda == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fit.k == doctest::Approx(1.0).epsilon(1e-10));  // normalized by y(0) = 5
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_FALSE(fit.truncated);
  }
  SUBCASE("constant series has zero rate and a perfect fit") {
    std::vector<double> t, y;
    for (int i = 0; i <= 50; ++i) {
      t.push_back(0.1 * i);
      y.push_back(3.0);
    }
    const RateFit fit = fit_exponential(t, y, 0.5, 4.5);
    CHECK(fit.lambda == doctest::Approx(0.0).scale(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("a floored tail truncates the window with a warning") {
    std::vector<double> t, y;
    for (int i = 0; i <= 100; ++i) {
      t.push_back(0.1 * i);
      y.push_back(std::exp(-4.0 * t.back()));  // below 1e-13 past t ~ 7.5
    }
    const RateFit fit = fit_exponential(t, y, 1.0, 9.0);
    CHECK(fit.truncated);
    CHECK(fit.lambda == doctest::Approx(4.0).epsilon(1e-6));
  }
  SUBCASE("rejects an empty window") {
    std::vector<double> t{0.0, 1.0}, y{1.0, 1.0};
    CHECK_THROWS_AS(fit_exponential(t, y, 2.0, 1.0), Error);
  }
}

TEST_CASE("integrator converges at fourth order") {
  // On the manifold every agent follows dz = sin z, whose exact solution is
  // tan(z/2) = tan(z0/2) e^t.
  const Example& ex = find_example("scalar-sine");
  const CommGraph g = path_graph(2);
  const SyncController ctrl = make_local_controller(g, ex.cert);
  const double z0 = 1.0;
  const double exact = 2.0 * std::atan(std::tan(z0 / 2.0) * std::exp(1.0));

  auto final_error = [&](double dt) {
    ExperimentConfig cfg;
    cfg.system = ex.system;
    cfg.controller = &ctrl;
    cfg.node_count = 2;
    cfg.x0 = Eigen::VectorXd::Constant(2, z0);
    cfg.T = 1.0;
    cfg.dt = dt;
    const Trace tr = integrate(cfg);
    return std::abs(tr.x.back()[0] - exact);
  };

  const double e1 = final_error(0.02);
  const double e2 = final_error(0.01);
  const double e3 = final_error(0.005);
  CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.35));
  CHECK(e2 / e3 == doctest::Approx(16.0).epsilon(0.35));
}

TEST_CASE("ring relabelling permutes the trace") {
  const Example& ex = find_example("scalar-sine");
  const CommGraph g = ring_graph(4);
  const SyncController ctrl = make_local_controller(g, ex.cert);

  Eigen::VectorXd x0(4);
  x0 << 0.3, -1.2, 0.8, 2.0;
  // Rotation 1 -> 2 -> 3 -> 4 -> 1 is a graph automorphism of the ring.
  const auto rotate = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(4);
    for (int i = 0; i < 4; ++i) y[(i + 1) % 4] = x[i];
    return y;
  };

  ExperimentConfig cfg;
  cfg.system = ex.system;
  cfg.controller = &ctrl;
  cfg.node_count = 4;
  cfg.T = 1.0;
  cfg.dt = 1e-2;
  cfg.x0 = x0;
  const Trace base = integrate(cfg);
  cfg.x0 = rotate(x0);
  const Trace turned = integrate(cfg);

  REQUIRE(base.x.size() == turned.x.size());
  for (std::size_t k = 0; k < base.x.size(); k += 10) {
    CHECK((rotate(base.x[k]) - turned.x[k]).cwiseAbs().maxCoeff() <= 1e-10);
  }
  CHECK(std::abs(base.dist.back() - turned.dist.back()) <= 1e-10);
}

TEST_CASE("decimation keeps the first and last samples") {
  const CommGraph g = path_graph(2);
  const SyncController ctrl = zero_gain_controller(g);
  ExperimentConfig cfg;
  cfg.system = find_example("scalar-unstable").system;
  cfg.controller = &ctrl;
  cfg.node_count = 2;
  cfg.x0 = (Eigen::VectorXd(2) << 0.1, 0.2).finished();
  cfg.T = 1.0;
  cfg.dt = 0.1;
  cfg.decimate = 3;
  const Trace tr = integrate(cfg);
  REQUIRE(tr.t.size() == 5);  // t = 0, 0.3, 0.6, 0.9, 1.0
  CHECK(tr.t.front() == 0.0);
  CHECK(tr.t.back() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("integrated traces satisfy the sandwich inequality") {
  const Example& ex = find_example("scalar-sine");
  const CommGraph g = ring_graph(5);
  const CouplingMatrix coupling = find_c1(g);
  SampleSet samples = SampleSet::grid(Box{{-M_PI, M_PI}}, 41);
  const SyncController ctrl = make_global_controller(ex.P0, ex.G0, g, ex.system, samples,
                                                     ex.Q, coupling);
  Rng rng(7);
  ExperimentConfig cfg;
  cfg.system = ex.system;
  cfg.controller = &ctrl;
  cfg.node_count = 5;
  cfg.x0 = Eigen::VectorXd::NullaryExpr(5, [&](Eigen::Index) { return rng.uniform(-10, 10); });
  cfg.T = 10.0;
  cfg.dt = 1e-3;
  cfg.decimate = 10;
  const Trace tr = integrate(cfg);
  CHECK(sandwich_violation(tr) <= 0.0);
  CHECK_FALSE(tr.blew_up);
  CHECK(tr.dist.back() < 1e-6 * tr.dist.front());
}
