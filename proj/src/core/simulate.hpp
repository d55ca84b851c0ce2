#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "core/synthesis.hpp"
#include "core/system.hpp"

namespace synckit {

// Closed-loop experiment: N copies of the agent dynamics coupled through a
// controller, integrated with the classical fixed-step RK4 scheme.
struct ExperimentConfig {
  ControlAffineSystem system;  // single-agent dynamics
  const SyncController* controller = nullptr;
  int node_count = 0;
  Eigen::VectorXd x0;  // stacked initial state, N*n entries
  double T = 10.0;
  double dt = 1e-3;
  int decimate = 1;  // record every k-th step
};

struct Trace {
  int node_count = 0;
  int state_dim = 0;
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;       // stacked states
  std::vector<double> dist;             // |x|_D
  std::vector<double> norm_e;           // |e|, e_i = x_{i+1} - x_1
  std::vector<double> u_norm;           // ||phi(x)||
  std::vector<double> V;                // e^T (I (x) P) e when requested
  bool blew_up = false;
  double escape_time = 0.0;  // last finite time when blew_up
};

// Distance to the synchronization manifold: sqrt(sum_i |x_i - mean|^2).
double sync_distance(const Eigen::VectorXd& x, int node_count, int state_dim);

// Transverse error (x_2 - x_1, ..., x_N - x_1).
Eigen::VectorXd transverse_error(const Eigen::VectorXd& x, int node_count, int state_dim);

// Fixed-step RK4 integration of dx_i = f(x_i) + g(x_i) phi_i(x). A non-finite
// state truncates the trace and flags blow-up instead of failing.
Trace integrate(const ExperimentConfig& cfg);

// V(t_k) = e(t_k)^T (I (x) P) e(t_k) for a constant metric P; fills
// trace.V and returns the largest positive per-step increment.
double lyapunov_series(Trace& trace, const Eigen::MatrixXd& P);

struct RateFit {
  double lambda = 0.0;  // decay exponent (positive = decaying)
  double k = 0.0;       // prefactor normalized by the initial value
  double r_squared = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  bool truncated = false;  // window starved by the round-off floor
};

inline constexpr double kDistanceFloor = 1e-13;

// Least squares on (t, log y) over [window_lo, window_hi] using only samples
// above the round-off floor; lambda = -slope, k = exp(intercept)/y(0).
RateFit fit_exponential(const std::vector<double>& t, const std::vector<double>& y,
                        double window_lo, double window_hi);

// Convenience: fit on the trace's |x|_D series.
RateFit fit_rate(const Trace& trace, double window_lo, double window_hi);

// Sandwich invariant |x|_D <= |e| <= sqrt(2(N-1)) |x|_D + slack at every
// sample; returns the worst violation (<= 0 means it holds).
double sandwich_violation(const Trace& trace);

}  // namespace synckit
