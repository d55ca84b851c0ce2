#include "core/registry.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "core/errors.hpp"

namespace synckit {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::MatrixXd constant_matrix(const Eigen::MatrixXd& value) { return value; }

// Scalar benchmark: f = sin z, identity metric. The strengthened inequality
// 2 cos z - rho + q <= 0 is tight at z = 0 for rho = 4, q = 2.
Example make_scalar_sine() {
  Example ex;
  ex.name = "scalar-sine";
  ex.system.state_dim = 1;
  ex.system.input_dim = 1;
  ex.system.f = [](const Eigen::VectorXd& z) {
    return Eigen::VectorXd::Constant(1, std::sin(z[0]));
  };
  ex.system.g = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); };
  ex.system.jac_f = [](const Eigen::VectorXd& z) {
    return Eigen::MatrixXd::Constant(1, 1, std::cos(z[0]));
  };
  ex.cert.dim = 1;
  ex.cert.P = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); };
  ex.cert.dP = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Zero(1, 1);
  };
  ex.cert.U = [](const Eigen::VectorXd& z) { return z[0]; };
  ex.cert.grad_U = [](const Eigen::VectorXd&) { return Eigen::RowVectorXd::Ones(1); };
  ex.cert.alpha = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1); };
  ex.cert.p_lower = 1.0;
  ex.cert.p_upper = 1.0;
  ex.cert.rho = 4.0;
  ex.cert.q_margin = 2.0;
  ex.box = {{-kPi, kPi}};
  ex.Q = Eigen::MatrixXd::Constant(1, 1, 2.0);
  ex.constant_metric = true;
  ex.constant_input = true;
  ex.P0 = Eigen::MatrixXd::Identity(1, 1);
  ex.G0 = Eigen::MatrixXd::Identity(1, 1);
  return ex;
}

// Scalar benchmark with unstable drift f = z; synchronizable under coupling,
// divergent without it. Used by failure-mode experiments.
Example make_scalar_unstable() {
  Example ex;
  ex.name = "scalar-unstable";
  ex.system.state_dim = 1;
  ex.system.input_dim = 1;
  ex.system.f = [](const Eigen::VectorXd& z) { return Eigen::VectorXd::Constant(1, z[0]); };
  ex.system.g = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); };
  ex.system.jac_f = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); };
  ex.cert.dim = 1;
  ex.cert.P = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); };
  ex.cert.dP = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Zero(1, 1);
  };
  ex.cert.U = [](const Eigen::VectorXd& z) { return z[0]; };
  ex.cert.grad_U = [](const Eigen::VectorXd&) { return Eigen::RowVectorXd::Ones(1); };
  ex.cert.alpha = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1); };
  ex.cert.p_lower = 1.0;
  ex.cert.p_upper = 1.0;
  ex.cert.rho = 4.0;
  ex.cert.q_margin = 1.0;
  ex.box = {{-2.0, 2.0}};
  ex.Q = Eigen::MatrixXd::Identity(1, 1);
  ex.constant_metric = true;
  ex.constant_input = true;
  ex.P0 = Eigen::MatrixXd::Identity(1, 1);
  ex.G0 = Eigen::MatrixXd::Identity(1, 1);
  return ex;
}

// Planar single-input benchmark with state-dependent input gain
//   f = (-z1 + sin(z2) cos(z1) + z2, 0),   g = (0, 2 + sin(z1)),
// certified by the constant metric [[2,1],[1,2]] with potential z1 + 2 z2.
Example make_planar_a() {
  Example ex;
  ex.name = "planar-sine";
  ex.system.state_dim = 2;
  ex.system.input_dim = 1;
  ex.system.f = [](const Eigen::VectorXd& z) {
    Eigen::VectorXd f(2);
    f[0] = -z[0] + std::sin(z[1]) * std::cos(z[0]) + z[1];
    f[1] = 0.0;
    return f;
  };
  ex.system.g = [](const Eigen::VectorXd& z) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 1);
    g(1, 0) = 2.0 + std::sin(z[0]);
    return g;
  };
  ex.system.jac_f = [](const Eigen::VectorXd& z) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2, 2);
    J(0, 0) = -1.0 - std::sin(z[1]) * std::sin(z[0]);
    J(0, 1) = std::cos(z[1]) * std::cos(z[0]) + 1.0;
    return J;
  };
  Eigen::MatrixXd P(2, 2);
  P << 2.0, 1.0, 1.0, 2.0;
  ex.cert.dim = 2;
  ex.cert.P = [P](const Eigen::VectorXd&) { return P; };
  ex.cert.dP = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Zero(2, 2);
  };
  ex.cert.U = [](const Eigen::VectorXd& z) { return z[0] + 2.0 * z[1]; };
  ex.cert.grad_U = [](const Eigen::VectorXd&) {
    Eigen::RowVectorXd g(2);
    g << 1.0, 2.0;
    return g;
  };
  ex.cert.alpha = [](const Eigen::VectorXd& z) {
    return Eigen::VectorXd::Constant(1, 1.0 / (2.0 + std::sin(z[0])));
  };
  ex.cert.p_lower = 1.0;
  ex.cert.p_upper = 3.0;
  ex.cert.rho = 4.0;
  ex.cert.q_margin = 1.0;
  ex.box = {{-kPi, kPi}, {-kPi, kPi}};
  ex.Q = Eigen::MatrixXd::Identity(2, 2);
  ex.constant_metric = true;
  ex.P0 = P;
  ex.grad_alpha = [](const Eigen::VectorXd& z) {
    Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(2);
    const double q = 2.0 + std::sin(z[0]);
    g[0] = -std::cos(z[0]) / (q * q);
    return g;
  };
  KillingData killing;
  killing.g = [](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    Eigen::VectorXd g(2);
    g << 0.0, 2.0 + std::sin(z[0]);
    return g;
  };
  killing.q = [](const Eigen::VectorXd& z) { return 2.0 + std::sin(z[0]); };
  killing.jac_field = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(2, 2); };
  ex.killing = killing;
  return ex;
}

// Strict-feedback composite of the planar benchmark: z_b drives the a-block
// through g_a, and the b-row is a bare integrator (f_b = 0, g_b = 1).
Example make_planar_strict() {
  Example ex = make_planar_a();
  ex.name = "planar-sine-strict";
  auto sfs = std::make_shared<StrictFeedbackSystem>();
  sfs->na = 2;
  sfs->f_a = ex.system.f;
  sfs->g_a = [](const Eigen::VectorXd& z) {
    Eigen::VectorXd g(2);
    g << 0.0, 2.0 + std::sin(z[0]);
    return g;
  };
  sfs->jac_f_a = ex.system.jac_f;
  sfs->jac_g_a = [](const Eigen::VectorXd& z) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2, 2);
    J(1, 0) = std::cos(z[0]);
    return J;
  };
  sfs->f_b = [](const Eigen::VectorXd&) { return 0.0; };
  sfs->g_b = [](const Eigen::VectorXd&) { return 1.0; };
  sfs->grad_f_b = [](const Eigen::VectorXd&) { return Eigen::RowVectorXd::Zero(3); };
  sfs->grad_g_b = [](const Eigen::VectorXd&) { return Eigen::RowVectorXd::Zero(3); };
  sfs->g_b_lower = 1.0;
  sfs->g_b_upper = 1.0;
  sfs->q_a = [](const Eigen::VectorXd& z) { return 2.0 + std::sin(z[0]); };
  sfs->grad_q_a = [](const Eigen::VectorXd& z) {
    Eigen::RowVectorXd g(2);
    g << std::cos(z[0]), 0.0;
    return g;
  };
  sfs->hess_q_a = [](const Eigen::VectorXd& z) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, 2);
    H(0, 0) = -std::sin(z[0]);
    return H;
  };
  ex.strict = sfs;
  return ex;
}

// Linear rotation with single-column input; the constant metric [[2,1],[1,2]]
// satisfies the strengthened inequality with rho = 2, Q = I/2.
Example make_linear_rotation() {
  Example ex;
  ex.name = "linear-rotation";
  Eigen::MatrixXd A(2, 2);
  A << 0.0, 1.0, -1.0, 0.0;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2, 1);
  G(1, 0) = 1.0;
  Eigen::MatrixXd P(2, 2);
  P << 2.0, 1.0, 1.0, 2.0;
  ex.system.state_dim = 2;
  ex.system.input_dim = 1;
  ex.system.f = [A](const Eigen::VectorXd& z) -> Eigen::VectorXd { return A * z; };
  ex.system.g = [G](const Eigen::VectorXd&) { return G; };
  ex.system.jac_f = [A](const Eigen::VectorXd&) { return constant_matrix(A); };
  const Eigen::RowVectorXd gradU = (P * G).transpose();
  ex.cert.dim = 2;
  ex.cert.P = [P](const Eigen::VectorXd&) { return P; };
  ex.cert.dP = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Zero(2, 2);
  };
  ex.cert.U = [gradU](const Eigen::VectorXd& z) { return gradU * z; };
  ex.cert.grad_U = [gradU](const Eigen::VectorXd&) { return gradU; };
  ex.cert.alpha = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1); };
  ex.cert.p_lower = 1.0;
  ex.cert.p_upper = 3.0;
  ex.cert.rho = 2.0;
  ex.cert.q_margin = 0.5;
  ex.box = {{-5.0, 5.0}, {-5.0, 5.0}};
  ex.Q = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  ex.constant_metric = true;
  ex.constant_input = true;
  ex.P0 = P;
  ex.G0 = G;
  return ex;
}

// Backstepped variant: choose eta on the base box, augment with z_b in
// [-1, 1], then verify (stamping rho_b and the margin matrix).
Example make_backstepped(const Example& base) {
  if (!base.strict) {
    throw_usage("example '" + base.name + "' has no strict-feedback form to backstep");
  }
  ASubCertificate cert_a;
  cert_a.cert = base.cert;
  cert_a.box = base.box;
  cert_a.Q = base.Q;
  cert_a.grad_alpha = base.grad_alpha;
  cert_a.constant_metric = base.constant_metric;

  const SampleSet eta_grid = SampleSet::grid(base.box, 21);
  const double eta = choose_eta(cert_a, *base.strict, eta_grid);
  AugmentedCertificate aug = augment_certificate(cert_a, *base.strict, eta, 1.0);
  const SampleSet verify_grid = SampleSet::grid(aug.box, 13);
  const AugmentedVerification verdict = verify_augmented(aug, *base.strict, verify_grid);
  if (!verdict.pass) {
    throw_numeric("backstepped certificate for '" + base.name +
                  "' failed verification: " + verdict.diagnostic);
  }

  Example ex;
  ex.name = base.name + "-backstepped";
  ex.system = aug.system;
  ex.cert = aug.cert;
  ex.box = aug.box;
  ex.Q = verdict.epsilon * Eigen::MatrixXd::Identity(aug.cert.dim, aug.cert.dim);
  ex.eta = eta;
  ex.epsilon = verdict.epsilon;
  KillingData killing;
  const int na = base.strict->na;
  const ScalarFn g_b = base.strict->g_b;
  killing.g = [g_b, na](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(na + 1);
    g[na] = g_b(z);
    return g;
  };
  killing.q = aug.q;
  const ScalarFn q_a = base.strict->q_a;
  const RowVectorFn grad_q_a = base.strict->grad_q_a;
  killing.jac_field = [q_a, grad_q_a, na](const Eigen::VectorXd& z) -> Eigen::MatrixXd {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(na + 1, na + 1);
    const Eigen::VectorXd za = z.head(na);
    const double q = q_a(za);
    J.block(na, 0, 1, na) = -grad_q_a(za) / (q * q);
    return J;
  };
  ex.killing = killing;
  return ex;
}

}  // namespace

const Example& find_example(const std::string& name) {
  static std::map<std::string, Example> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(name);
  if (it != cache.end()) return it->second;

  Example ex;
  if (name == "scalar-sine") {
    ex = make_scalar_sine();
  } else if (name == "scalar-unstable") {
    ex = make_scalar_unstable();
  } else if (name == "planar-sine") {
    ex = make_planar_a();
  } else if (name == "planar-sine-strict") {
    ex = make_planar_strict();
  } else if (name == "linear-rotation") {
    ex = make_linear_rotation();
  } else if (name.size() > 12 && name.substr(name.size() - 12) == "-backstepped") {
    const std::string base = name.substr(0, name.size() - 12);
    Example* base_ex = nullptr;
    {
      // Resolve the base outside the lock-free path; recursion would
      // deadlock, so look it up directly here.
      auto base_it = cache.find(base);
      if (base_it == cache.end()) {
        Example built;
        if (base == "planar-sine-strict") {
          built = make_planar_strict();
        } else {
          throw_usage("unknown base example '" + base + "' for backstepping");
        }
        base_it = cache.emplace(base, std::move(built)).first;
      }
      base_ex = &base_it->second;
    }
    ex = make_backstepped(*base_ex);
  } else {
    std::string known;
    for (const auto& n : example_names()) {
      if (!known.empty()) known += ", ";
      known += n;
    }
    throw_usage("unknown example '" + name + "' (known: " + known + ")");
  }
  return cache.emplace(name, std::move(ex)).first->second;
}

std::vector<std::string> example_names() {
  return {"scalar-sine", "scalar-unstable", "planar-sine", "planar-sine-strict",
          "linear-rotation", "planar-sine-strict-backstepped"};
}

}  // namespace synckit
