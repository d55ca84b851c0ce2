#include "core/backstepping.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "core/errors.hpp"

namespace synckit {

namespace {

std::string point_to_string(const Eigen::VectorXd& z) {
  std::ostringstream out;
  out << "(";
  for (int i = 0; i < z.size(); ++i) {
    if (i > 0) out << ", ";
    out << z[i];
  }
  out << ")";
  return out.str();
}

double scalar_alpha(const MetricCertificate& cert, const Eigen::VectorXd& z) {
  const Eigen::VectorXd a = cert.alpha(z);
  if (a.size() != 1) {
    throw_usage("backstepping expects a single-input a-subsystem (alpha has " +
                std::to_string(a.size()) + " entries)");
  }
  return a[0];
}

}  // namespace

double choose_eta(const ASubCertificate& cert_a, const StrictFeedbackSystem& sfs,
                  const SampleSet& samples, double safety) {
  if (cert_a.cert.rho <= 0.0) {
    throw_usage("eta selection needs a positive rho (got " + std::to_string(cert_a.cert.rho) +
                ")");
  }
  if (samples.empty()) throw_usage("eta selection needs at least one sample");
  double worst = -std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& z : samples.points()) {
    const double product = scalar_alpha(cert_a.cert, z) * sfs.q_a(z);
    if (!(product > 0.0)) {
      throw_numeric("alpha_a * q_a = " + std::to_string(product) + " at " + point_to_string(z) +
                    "; the scaling must keep a fixed positive sign");
    }
    worst = std::max(worst, product);
  }
  return safety * 0.5 * cert_a.cert.rho * worst;
}

AugmentedCertificate augment_certificate(const ASubCertificate& cert_a,
                                         const StrictFeedbackSystem& sfs, double eta,
                                         double M_b) {
  if (M_b <= 0.0) throw_usage("the z_b box half-width must be positive");
  if (eta <= 0.0) throw_usage("eta must be positive");
  if (!sfs.grad_q_a) throw_usage("the construction needs grad_q_a");
  const int na = sfs.na;
  const double q_floor = sfs.q_floor;

  // S(z) = grad q_a(z_a)^T z_b + eta alpha_a(z_a) P_a(z_a) g_a(z_a).
  const MetricCertificate base = cert_a.cert;
  const ScalarFn q_a = sfs.q_a;
  const RowVectorFn grad_q_a = sfs.grad_q_a;
  const VectorFn g_a = sfs.g_a;
  const auto S_of = [base, q_a, grad_q_a, g_a, eta, na](const Eigen::VectorXd& z) {
    const Eigen::VectorXd za = z.head(na);
    const double zb = z[na];
    return (grad_q_a(za).transpose() * zb +
            eta * base.alpha(za)[0] * (base.P(za) * g_a(za)))
        .eval();
  };

  AugmentedCertificate aug;
  aug.eta = eta;
  aug.box = cert_a.box;
  aug.box.push_back({-M_b, M_b});

  MetricCertificate cert;
  cert.dim = na + 1;
  cert.P = [S_of, q_a, base, na](const Eigen::VectorXd& z) -> Eigen::MatrixXd {
    const Eigen::VectorXd za = z.head(na);
    const Eigen::VectorXd S = S_of(z);
    const double q = q_a(za);
    Eigen::MatrixXd P(na + 1, na + 1);
    P.topLeftCorner(na, na) = base.P(za) + S * S.transpose();
    P.topRightCorner(na, 1) = S * q;
    P.bottomLeftCorner(1, na) = (S * q).transpose();
    P(na, na) = q * q;
    return P;
  };
  cert.U = [base, q_a, eta, na](const Eigen::VectorXd& z) {
    const Eigen::VectorXd za = z.head(na);
    return eta * base.U(za) + q_a(za) * z[na];
  };
  cert.grad_U = [base, grad_q_a, q_a, eta, na](const Eigen::VectorXd& z) -> Eigen::RowVectorXd {
    const Eigen::VectorXd za = z.head(na);
    Eigen::RowVectorXd grad(na + 1);
    grad.head(na) = eta * base.grad_U(za) + z[na] * grad_q_a(za);
    grad[na] = q_a(za);
    return grad;
  };
  const ScalarFn g_b = sfs.g_b;
  cert.alpha = [q_a, g_b, q_floor, na](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    const double denom = q_a(z.head(na)) * g_b(z);
    if (!std::isfinite(denom) || std::abs(denom) < q_floor) {
      throw_numeric("q_a * g_b vanishes at " + point_to_string(z));
    }
    return Eigen::VectorXd::Constant(1, 1.0 / denom);
  };
  cert.rho = base.rho;  // ladder prior; verify_augmented stamps the final value
  cert.fd_gradients = base.fd_gradients;

  // Analytic directional derivative of P_b, available when the a-metric is
  // constant and the second-order pieces are on hand.
  if (cert_a.constant_metric && sfs.hess_q_a && cert_a.grad_alpha && sfs.jac_g_a) {
    const MatrixFn hess_q_a = sfs.hess_q_a;
    const RowVectorFn grad_alpha = cert_a.grad_alpha;
    const MatrixFn jac_g_a = sfs.jac_g_a;
    cert.dP = [S_of, base, q_a, grad_q_a, g_a, hess_q_a, grad_alpha, jac_g_a, eta, na](
                  const Eigen::VectorXd& v, const Eigen::VectorXd& z) -> Eigen::MatrixXd {
      const Eigen::VectorXd za = z.head(na);
      const Eigen::VectorXd va = v.head(na);
      const double vb = v[na];
      const double zb = z[na];
      const Eigen::MatrixXd Pa = base.P(za);
      const Eigen::VectorXd S = S_of(z);
      const double q = q_a(za);
      const double dq = grad_q_a(za) * va;
      const double dalpha = grad_alpha(za) * va;
      // dS = Hq va zb + grad q^T vb + eta (grad alpha va) Pa g_a
      //      + eta alpha Pa J_g va.
      const Eigen::VectorXd dS = hess_q_a(za) * va * zb + grad_q_a(za).transpose() * vb +
                                 eta * dalpha * (Pa * g_a(za)) +
                                 eta * base.alpha(za)[0] * (Pa * (jac_g_a(za) * va));
      const Eigen::VectorXd top_right = dS * q + S * dq;
      Eigen::MatrixXd dP(na + 1, na + 1);
      dP.topLeftCorner(na, na) = dS * S.transpose() + S * dS.transpose();
      dP.topRightCorner(na, 1) = top_right;
      dP.bottomLeftCorner(1, na) = top_right.transpose();
      dP(na, na) = 2.0 * q * dq;
      return dP;
    };
  }
  aug.cert = std::move(cert);

  // Composite dynamics with u as the single input.
  ControlAffineSystem sys;
  sys.state_dim = na + 1;
  sys.input_dim = 1;
  const VectorFn f_a = sfs.f_a;
  const ScalarFn f_b = sfs.f_b;
  sys.f = [f_a, g_a, f_b, na](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    const Eigen::VectorXd za = z.head(na);
    Eigen::VectorXd out(na + 1);
    out.head(na) = f_a(za) + g_a(za) * z[na];
    out[na] = f_b(z);
    return out;
  };
  sys.g = [g_b, na](const Eigen::VectorXd& z) -> Eigen::MatrixXd {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(na + 1, 1);
    G(na, 0) = g_b(z);
    return G;
  };
  if (sfs.jac_f_a && sfs.jac_g_a && sfs.grad_f_b) {
    const MatrixFn jac_f_a = sfs.jac_f_a;
    const MatrixFn jac_g_a = sfs.jac_g_a;
    const RowVectorFn grad_f_b = sfs.grad_f_b;
    sys.jac_f = [jac_f_a, jac_g_a, grad_f_b, g_a, na](const Eigen::VectorXd& z) -> Eigen::MatrixXd {
      const Eigen::VectorXd za = z.head(na);
      Eigen::MatrixXd J(na + 1, na + 1);
      J.topLeftCorner(na, na) = jac_f_a(za) + z[na] * jac_g_a(za);
      J.topRightCorner(na, 1) = g_a(za);
      J.bottomRows(1) = grad_f_b(z);
      return J;
    };
  }
  aug.system = std::move(sys);

  aug.q = [q_a, g_b, na](const Eigen::VectorXd& z) { return q_a(z.head(na)) * g_b(z); };
  if (sfs.grad_g_b) {
    const RowVectorFn grad_g_b = sfs.grad_g_b;
    aug.grad_q = [q_a, g_b, grad_q_a, grad_g_b, na](const Eigen::VectorXd& z) -> Eigen::RowVectorXd {
      const Eigen::VectorXd za = z.head(na);
      Eigen::RowVectorXd grad = Eigen::RowVectorXd::Zero(na + 1);
      grad.head(na) = g_b(z) * grad_q_a(za);
      grad += q_a(za) * grad_g_b(z);
      return grad;
    };
  }
  return aug;
}

AugmentedVerification verify_augmented(AugmentedCertificate& aug, const StrictFeedbackSystem& sfs,
                                       const SampleSet& samples) {
  AugmentedVerification out;
  const int na = sfs.na;
  const int dim = aug.cert.dim;

  out.bounds = check_bounds(aug.cert, samples);
  out.integrability = check_integrability(aug.system, aug.cert, samples, 1e-10);

  // Metric invariance along g/q_b; the field (0, ..., 0, 1/q_a) has an
  // analytic Jacobian whenever grad_q_a is available.
  KillingData killing;
  const ScalarFn q_a = sfs.q_a;
  const ScalarFn g_b = sfs.g_b;
  killing.g = [g_b, na](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(na + 1);
    g[na] = g_b(z);
    return g;
  };
  killing.q = aug.q;
  const RowVectorFn grad_q_a = sfs.grad_q_a;
  killing.jac_field = [q_a, grad_q_a, na](const Eigen::VectorXd& z) -> Eigen::MatrixXd {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(na + 1, na + 1);
    const Eigen::VectorXd za = z.head(na);
    const double q = q_a(za);
    J.block(na, 0, 1, na) = -grad_q_a(za) / (q * q);
    return J;
  };
  out.killing = check_killing(killing, aug.cert, samples);

  out.input_bounds.property = "declared input-coefficient bounds";
  for (const Eigen::VectorXd& z : samples.points()) {
    const double gb = sfs.g_b(z);
    double margin = -std::numeric_limits<double>::infinity();
    if (sfs.g_b_upper > 0.0) {
      margin = std::max(sfs.g_b_lower - gb, gb - sfs.g_b_upper);
    }
    out.input_bounds.observe(margin, z);
  }
  out.input_bounds.finalize(0.0);

  // Kernel slack fixes epsilon, then the geometric ladder finds rho_b.
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(dim, dim);
  out.kernel = check_cmf_kernel(aug.system, aug.cert, samples, zero);
  const bool prerequisites = out.bounds.report.pass && out.integrability.pass &&
                             out.killing.pass && out.input_bounds.pass;
  if (out.kernel.worst_margin >= 0.0) {
    out.diagnostic = "kernel directions are not contracting (margin " +
                     std::to_string(out.kernel.worst_margin) + " at " +
                     point_to_string(out.kernel.worst_point) +
                     "); compact set too large or eta too small";
    out.pass = false;
    return out;
  }
  out.epsilon = std::isfinite(out.kernel.worst_margin) ? -0.5 * out.kernel.worst_margin : 1.0;
  const Eigen::MatrixXd Qb = out.epsilon * Eigen::MatrixXd::Identity(dim, dim);
  out.kernel = check_cmf_kernel(aug.system, aug.cert, samples, Qb);

  const double rho_base = aug.cert.rho > 0.0 ? aug.cert.rho : 1.0;
  MetricCertificate probe = aug.cert;
  bool found = false;
  for (int k = 0; k < kRhoLadderSteps; ++k) {
    probe.rho = rho_base * std::ldexp(1.0, k);
    out.strengthened = check_cmf_strengthened(aug.system, probe, samples, Qb);
    if (out.strengthened.pass) {
      out.rho_b = probe.rho;
      found = true;
      break;
    }
  }
  if (!found) {
    out.diagnostic =
        "no rho on the geometric ladder closes the strengthened inequality; "
        "compact set too large or eta too small";
    out.pass = false;
    return out;
  }

  out.pass = prerequisites;
  if (!prerequisites) {
    out.diagnostic = "a prerequisite check failed";
  } else {
    aug.cert.rho = out.rho_b;
    aug.cert.q_margin = out.epsilon;
  }
  return out;
}

}  // namespace synckit
