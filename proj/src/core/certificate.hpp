#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>

#include "core/report.hpp"
#include "core/sampling.hpp"
#include "core/system.hpp"

namespace synckit {

// Symmetric covariant tensor field P with its potential U, input scaling
// alpha and the margin data consumed by gain synthesis.
struct MetricCertificate {
  int dim = 0;
  MatrixFn P;  // z -> symmetric dim x dim
  // Analytic directional derivative (v, z) -> d/dt P(z + t v) at t = 0.
  // When absent, callers fall back to the flow-based finite difference.
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> dP;
  ScalarFn U;
  RowVectorFn grad_U;  // 1 x dim
  VectorFn alpha;      // input_dim entries
  double p_lower = 0.0;  // declared Loewner bounds; 0 means undeclared
  double p_upper = 0.0;
  double rho = 0.0;       // strengthened-inequality coefficient
  double q_margin = 0.0;  // smallest admissible lambda_min(Q)
  bool fd_gradients = false;  // grad_U (or alpha pieces) synthesized by finite differences

  bool has_analytic_dP() const { return static_cast<bool>(dP); }
};

// Vector-field data for the metric-invariance (Killing) check: the field is
// g(z)/q(z), with an optional analytic Jacobian of that quotient.
struct KillingData {
  VectorFn g;
  ScalarFn q;
  MatrixFn jac_field;  // optional: Jacobian of g/q
  double h_jac = 1e-5;
};

inline constexpr double kFlowStep = 1e-4;          // flow-derivative step
inline constexpr double kNullspaceRelTol = 1e-10;  // SVD rank cutoff
inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kQFloor = 1e-9;  // |q| below this counts as vanishing

// Evaluates P(z), rejecting non-finite or asymmetric values.
Eigen::MatrixXd eval_metric(const MetricCertificate& cert, const Eigen::VectorXd& z);

// Central difference [P(Z(z,+h)) - P(Z(z,-h))] / (2h) with Z one RK4 step
// along f. O(h^2) accurate for smooth tensors.
Eigen::MatrixXd flow_tensor_derivative(const ControlAffineSystem& sys,
                                       const MetricCertificate& cert,
                                       const Eigen::VectorXd& z, double h = kFlowStep);

// L_f P = d_f P + P (df/dz) + (df/dz)^T P.
Eigen::MatrixXd lie_derivative_tensor(const ControlAffineSystem& sys,
                                      const MetricCertificate& cert,
                                      const Eigen::VectorXd& z);

struct BoundsReport {
  VerificationReport report;
  double p_lower_est = 0.0;
  double p_upper_est = 0.0;
};

// Sampled Loewner bounds p_lower I <= P <= p_upper I; fails on an
// indefinite sample or a declared bound the estimates contradict.
BoundsReport check_bounds(const MetricCertificate& cert, const SampleSet& samples);

// Residual of grad U(z)^T = P(z) g(z) alpha(z) in the max norm.
VerificationReport check_integrability(const ControlAffineSystem& sys,
                                       const MetricCertificate& cert, const SampleSet& samples,
                                       std::optional<double> tol = std::nullopt);

// Kernel-restricted inequality: v^T (L_f P + Q) v <= 0 for v with
// v^T P g = 0, evaluated through an orthonormal kernel basis.
VerificationReport check_cmf_kernel(const ControlAffineSystem& sys, const MetricCertificate& cert,
                                    const SampleSet& samples, const Eigen::MatrixXd& Q,
                                    std::optional<double> tol = std::nullopt);

// Full-space inequality L_f P - rho gradU^T gradU + Q <= 0.
VerificationReport check_cmf_strengthened(const ControlAffineSystem& sys,
                                          const MetricCertificate& cert, const SampleSet& samples,
                                          const Eigen::MatrixXd& Q,
                                          std::optional<double> tol = std::nullopt);

// Metric invariance along g/q: max-norm of L_{g/q} P over the samples.
VerificationReport check_killing(const KillingData& field, const MetricCertificate& cert,
                                 const SampleSet& samples,
                                 std::optional<double> tol = std::nullopt);

// 1e-9 when both the tensor derivative and the Jacobian are analytic,
// 1e-6 once a finite difference participates.
double default_check_tolerance(const ControlAffineSystem& sys, const MetricCertificate& cert);

}  // namespace synckit
