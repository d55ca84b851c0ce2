#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "core/certificate.hpp"
#include "core/graph.hpp"
#include "core/report.hpp"
#include "core/sampling.hpp"
#include "core/system.hpp"

namespace synckit {

inline constexpr double kGainSafety = 1.25;

// Solution of S A + A^T S = -I (A a stability matrix) together with the
// largest nu satisfying S A + A^T S <= -nu S, namely nu = 1/lambda_max(S).
struct LyapunovMargin {
  Eigen::MatrixXd S;
  double nu = 0.0;
};
LyapunovMargin solve_lyapunov_margin(const Eigen::MatrixXd& A);

// Gain floor for the diffusive law: ell_min = rho / nu.
double local_min_gain(double rho, double nu);

// Synthesis record attached to a controller.
struct GainCertificate {
  Eigen::MatrixXd S;
  double nu = 0.0;
  double ell_min = 0.0;
  double gain = 0.0;
  double c1 = 0.0;  // global kind only
  double mu = 0.0;  // global kind only
  bool overridden = false;
};

// Networked control law; `phi` maps the stacked state (N*n) to the stacked
// input (N*p). Immutable after construction and reentrant.
struct SyncController {
  enum class Kind { local, global };
  Kind kind = Kind::local;
  int node_count = 0;
  int state_dim = 0;
  int input_dim = 0;
  Eigen::MatrixXd laplacian;
  Eigen::VectorXd weights;  // c_i; all ones for the local law
  GainCertificate gain;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> phi;
};

// Diffusive law u_i = -l alpha(x_i) sum_j L_ij U(x_j), evaluated through
// neighbour differences so it vanishes exactly on the diagonal. The gain
// defaults to safety * ell_min; an explicit gain below the floor is rejected
// (verdict error) unless `override_gain` is set.
SyncController make_local_controller(const CommGraph& graph, const MetricCertificate& cert,
                                     std::optional<double> gain = std::nullopt,
                                     double safety = kGainSafety, bool override_gain = false);

// Margin of the coupled-feedback matrix inequality
//   P J(z) + J(z)^T P - 2 l mu P G G^T P + Q <= 0
// over the samples (constant P, constant input matrix G).
VerificationReport global_block_check(const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                                      const ControlAffineSystem& sys, const SampleSet& samples,
                                      const Eigen::MatrixXd& Q, double mu, double ell,
                                      std::optional<double> tol = std::nullopt);

// Smallest gain passing the block check, located by doubling then bisection
// (the check is monotone in the gain). Verdict error when infeasible at 2^40.
double global_min_gain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                       const ControlAffineSystem& sys, const SampleSet& samples,
                       const Eigen::MatrixXd& Q, double mu, double rel_tol = 1e-3);

// Linear-feedback law u_i = -l c_i sum_j L_ij G^T P x_j with c_1 = coupling.c1
// and c_j = 1 otherwise. Requires coupling.mu > 0 and the block check to pass
// at the chosen gain; refusal names the worst sample. When `gain` is absent
// the minimum feasible gain times `safety` is used.
SyncController make_global_controller(const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                                      const CommGraph& graph, const ControlAffineSystem& sys,
                                      const SampleSet& samples, const Eigen::MatrixXd& Q,
                                      const CouplingMatrix& coupling,
                                      std::optional<double> gain = std::nullopt,
                                      double safety = kGainSafety, bool override_gain = false);

// Sparsity and manifold conditions: finite-difference cross-Jacobian blocks
// vanish for non-edges, and phi(1 (x) z) = 0 on the probe states.
struct StructuralReport {
  VerificationReport locality;
  VerificationReport manifold_zero;
  bool pass = false;
};
StructuralReport structural_checks(const SyncController& controller, const CommGraph& graph,
                                   const SampleSet& probes, double locality_tol = 1e-7,
                                   double manifold_tol = 1e-12, int max_jacobian_probes = 5);

}  // namespace synckit
