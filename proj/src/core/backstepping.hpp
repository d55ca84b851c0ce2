#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

#include "core/certificate.hpp"
#include "core/sampling.hpp"
#include "core/system.hpp"

namespace synckit {

inline constexpr double kEtaSafety = 1.1;
inline constexpr int kRhoLadderSteps = 21;  // rho_a * 2^k, k = 0..20

// Two-block triangular dynamics
//   dz_a = f_a(z_a) + g_a(z_a) z_b,   dz_b = f_b(z) + g_b(z) u
// with the non-vanishing scaling q_a used by the certificate construction.
// Analytic derivative fields are optional; absent ones fall back to finite
// differences with widened tolerances.
struct StrictFeedbackSystem {
  int na = 0;
  VectorFn f_a;        // R^na -> R^na
  VectorFn g_a;        // R^na -> R^na
  MatrixFn jac_f_a;    // optional
  MatrixFn jac_g_a;    // optional
  ScalarFn f_b;        // R^(na+1) -> R
  ScalarFn g_b;        // R^(na+1) -> R
  RowVectorFn grad_f_b;  // optional, 1 x (na+1)
  RowVectorFn grad_g_b;  // optional, 1 x (na+1)
  double g_b_lower = 0.0;  // declared bounds on g_b; 0 means undeclared
  double g_b_upper = 0.0;
  ScalarFn q_a;
  RowVectorFn grad_q_a;  // required by the construction
  MatrixFn hess_q_a;     // optional
  double q_floor = 1e-9;
};

// Certificate for the a-subsystem on its compact box, with the margin matrix
// the strengthened inequality was verified against.
struct ASubCertificate {
  MetricCertificate cert;  // over R^na
  Box box;                 // C_a
  Eigen::MatrixXd Q;       // Q_a
  RowVectorFn grad_alpha;  // optional, enables the analytic augmented dP
  bool constant_metric = false;
};

// Smallest admissible eta (rho_a <= 2 eta / (alpha_a q_a) on the grid),
// times `safety`. Rejects nonpositive rho_a and sign-violating alpha_a q_a.
double choose_eta(const ASubCertificate& cert_a, const StrictFeedbackSystem& sfs,
                  const SampleSet& samples, double safety = kEtaSafety);

// Augmented certificate over R^(na+1) together with the composite dynamics
// and the data needed for chaining (q, grad_q) and verification (box).
struct AugmentedCertificate {
  MetricCertificate cert;
  ControlAffineSystem system;  // composite dynamics, input = u
  Box box;                     // C_a x [-M_b, M_b]
  ScalarFn q;                  // q_b = q_a g_b
  RowVectorFn grad_q;          // set when grad_g_b (or constant g_b) is known
  double eta = 0.0;
};

// Theorem-style construction: with S(z) = grad q_a^T z_b + eta alpha_a P_a g_a,
//   P_b = [[P_a + S S^T, S q_a],[S^T q_a, q_a^2]],  U_b = eta U_a + q_a z_b,
//   alpha_b = 1/(q_a g_b),  q_b = q_a g_b,
//   grad U_b = [eta grad U_a + z_b grad q_a, q_a].
// The analytic dP_b is attached when the a-metric is constant and hess_q_a,
// grad_alpha, jac_g_a are all present.
AugmentedCertificate augment_certificate(const ASubCertificate& cert_a,
                                         const StrictFeedbackSystem& sfs, double eta,
                                         double M_b);

// Verification bundle for an augmented certificate: bounds, integrability,
// metric invariance, declared input bounds, then a geometric search for the
// smallest rho_b on {rho_a 2^k} passing the strengthened inequality with
// Q_b = epsilon I (epsilon = half the observed kernel slack). On success the
// certificate's rho and q_margin are stamped in place.
struct AugmentedVerification {
  BoundsReport bounds;
  VerificationReport integrability;
  VerificationReport killing;
  VerificationReport input_bounds;
  VerificationReport kernel;
  VerificationReport strengthened;
  double rho_b = 0.0;
  double epsilon = 0.0;
  bool pass = false;
  std::string diagnostic;  // set when pass is false
};
AugmentedVerification verify_augmented(AugmentedCertificate& aug, const StrictFeedbackSystem& sfs,
                                       const SampleSet& samples);

}  // namespace synckit
