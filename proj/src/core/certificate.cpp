#include "core/certificate.hpp"

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

void require_finite(const Eigen::MatrixXd& m, const char* what, const Eigen::VectorXd& z) {
  if (!m.allFinite()) {
    throw_numeric(std::string(what) + " evaluated to a non-finite value at " +
                  point_to_string(z));
  }
}

double max_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

Eigen::MatrixXd eval_metric(const MetricCertificate& cert, const Eigen::VectorXd& z) {
  Eigen::MatrixXd P = cert.P(z);
  require_finite(P, "metric tensor", z);
  if (P.rows() != cert.dim || P.cols() != cert.dim) {
    throw_numeric("metric tensor has shape " + std::to_string(P.rows()) + "x" +
                  std::to_string(P.cols()) + ", expected " + std::to_string(cert.dim) + "x" +
                  std::to_string(cert.dim));
  }
  const double skew = (P - P.transpose()).cwiseAbs().maxCoeff();
  if (skew > kSymmetryTol) {
    throw_numeric("metric tensor asymmetric by " + std::to_string(skew) + " at " +
                  point_to_string(z));
  }
  return 0.5 * (P + P.transpose());
}

Eigen::MatrixXd flow_tensor_derivative(const ControlAffineSystem& sys,
                                       const MetricCertificate& cert, const Eigen::VectorXd& z,
                                       double h) {
  const Eigen::VectorXd forward = rk4_step(sys.f, z, h);
  const Eigen::VectorXd backward = rk4_step(sys.f, z, -h);
  if (!forward.allFinite() || !backward.allFinite()) {
    throw_numeric("flow step produced a non-finite state at " + point_to_string(z));
  }
  const Eigen::MatrixXd diff =
      (eval_metric(cert, forward) - eval_metric(cert, backward)) / (2.0 * h);
  return 0.5 * (diff + diff.transpose());
}

Eigen::MatrixXd lie_derivative_tensor(const ControlAffineSystem& sys,
                                      const MetricCertificate& cert, const Eigen::VectorXd& z) {
  Eigen::MatrixXd transport;
  if (cert.has_analytic_dP()) {
    transport = cert.dP(sys.f(z), z);
    require_finite(transport, "metric directional derivative", z);
    transport = 0.5 * (transport + transport.transpose()).eval();
  } else {
    transport = flow_tensor_derivative(sys, cert, z);
  }
  const Eigen::MatrixXd J = sys.jacobian_f(z);
  require_finite(J, "drift Jacobian", z);
  const Eigen::MatrixXd P = eval_metric(cert, z);
  return transport + P * J + J.transpose() * P;
}

BoundsReport check_bounds(const MetricCertificate& cert, const SampleSet& samples) {
  BoundsReport out;
  out.report.property = "uniform metric bounds";
  out.p_lower_est = std::numeric_limits<double>::infinity();
  out.p_upper_est = -std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& z : samples.points()) {
    const Eigen::MatrixXd P = eval_metric(cert, z);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    out.p_lower_est = std::min(out.p_lower_est, lo);
    out.p_upper_est = std::max(out.p_upper_est, hi);
    // Margin <= 0 iff the sample respects positivity and any declared bounds.
    double margin = -lo;
    if (cert.p_lower > 0.0) margin = std::max(margin, cert.p_lower - lo);
    if (cert.p_upper > 0.0) margin = std::max(margin, hi - cert.p_upper);
    out.report.observe(margin, z);
  }
  // Sampled eigenvalues carry round-off, so exactly-tight declared bounds
  // still pass.
  out.report.finalize(kTolAnalytic);
  return out;
}

VerificationReport check_integrability(const ControlAffineSystem& sys,
                                       const MetricCertificate& cert, const SampleSet& samples,
                                       std::optional<double> tol) {
  VerificationReport report;
  report.property = "potential integrability";
  for (const Eigen::VectorXd& z : samples.points()) {
    const Eigen::MatrixXd P = eval_metric(cert, z);
    const Eigen::MatrixXd g = sys.g(z);
    require_finite(g, "input matrix", z);
    const Eigen::VectorXd a = cert.alpha(z);
    require_finite(a, "input scaling", z);
    const Eigen::VectorXd residual = cert.grad_U(z).transpose() - P * g * a;
    require_finite(residual, "integrability residual", z);
    report.observe(residual.cwiseAbs().maxCoeff(), z);
  }
  report.finalize(tol.value_or(cert.fd_gradients ? kTolFiniteDiff : kTolAnalytic));
  return report;
}

VerificationReport check_cmf_kernel(const ControlAffineSystem& sys, const MetricCertificate& cert,
                                    const SampleSet& samples, const Eigen::MatrixXd& Q,
                                    std::optional<double> tol) {
  VerificationReport report;
  report.property = "kernel contraction inequality";
  for (const Eigen::VectorXd& z : samples.points()) {
    const Eigen::MatrixXd P = eval_metric(cert, z);
    const Eigen::MatrixXd g = sys.g(z);
    require_finite(g, "input matrix", z);
    // Kernel of (P g)^T: right singular vectors below the rank cutoff.
    const Eigen::MatrixXd constraint = (P * g).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(constraint, Eigen::ComputeFullV);
    const auto& sigma = svd.singularValues();
    const double cutoff = sigma.size() > 0 ? kNullspaceRelTol * sigma.maxCoeff() : 0.0;
    int rank = 0;
    for (int i = 0; i < sigma.size(); ++i) {
      if (sigma[i] > cutoff) ++rank;
    }
    const int kernel_dim = cert.dim - rank;
    if (kernel_dim == 0) {
      // Fully actuated directions only: the constraint is vacuous here.
      report.observe(-std::numeric_limits<double>::infinity(), z);
      continue;
    }
    const Eigen::MatrixXd W = svd.matrixV().rightCols(kernel_dim);
    const Eigen::MatrixXd LfP = lie_derivative_tensor(sys, cert, z);
    report.observe(max_eigenvalue(W.transpose() * (LfP + Q) * W), z);
  }
  report.finalize(tol.value_or(default_check_tolerance(sys, cert)));
  return report;
}

VerificationReport check_cmf_strengthened(const ControlAffineSystem& sys,
                                          const MetricCertificate& cert, const SampleSet& samples,
                                          const Eigen::MatrixXd& Q, std::optional<double> tol) {
  VerificationReport report;
  report.property = "strengthened contraction inequality";
  for (const Eigen::VectorXd& z : samples.points()) {
    const Eigen::MatrixXd LfP = lie_derivative_tensor(sys, cert, z);
    const Eigen::RowVectorXd grad = cert.grad_U(z);
    require_finite(grad, "potential gradient", z);
    const Eigen::MatrixXd M = LfP - cert.rho * grad.transpose() * grad + Q;
    report.observe(max_eigenvalue(M), z);
  }
  report.finalize(tol.value_or(default_check_tolerance(sys, cert)));
  return report;
}

VerificationReport check_killing(const KillingData& field, const MetricCertificate& cert,
                                 const SampleSet& samples, std::optional<double> tol) {
  VerificationReport report;
  report.property = "metric invariance along g/q";
  const VectorFn scaled = [&field](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    return field.g(z) / field.q(z);
  };
  ControlAffineSystem flow;
  flow.state_dim = cert.dim;
  flow.input_dim = 0;
  flow.f = scaled;
  flow.jac_f = field.jac_field;
  flow.h_jac = field.h_jac;
  for (const Eigen::VectorXd& z : samples.points()) {
    const double q = field.q(z);
    if (!std::isfinite(q) || std::abs(q) < kQFloor) {
      throw_numeric("input scaling denominator vanishes at " + point_to_string(z) +
                    " (|q| = " + std::to_string(std::abs(q)) + ")");
    }
    const Eigen::MatrixXd LvP = lie_derivative_tensor(flow, cert, z);
    report.observe(LvP.cwiseAbs().maxCoeff(), z);
  }
  report.finalize(tol.value_or(kTolFiniteDiff));
  return report;
}

double default_check_tolerance(const ControlAffineSystem& sys, const MetricCertificate& cert) {
  const bool analytic = cert.has_analytic_dP() && sys.has_analytic_jacobian();
  return analytic ? kTolAnalytic : kTolFiniteDiff;
}

}  // namespace synckit
