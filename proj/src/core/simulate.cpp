#include "core/simulate.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace synckit {

double sync_distance(const Eigen::VectorXd& x, int node_count, int state_dim) {
  // Parallel-axis form of sum_i |x_i - mean|^2: subtracting the nonnegative
  // N |mean - x_1|^2 from |e|^2 keeps the distance <= the transverse-error
  // norm even in floating point.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(state_dim);
  for (int i = 0; i < node_count; ++i) mean += x.segment(i * state_dim, state_dim);
  mean /= node_count;
  double e_sq = 0.0;
  for (int i = 1; i < node_count; ++i) {
    e_sq += (x.segment(i * state_dim, state_dim) - x.head(state_dim)).squaredNorm();
  }
  const double shift = node_count * (mean - x.head(state_dim)).squaredNorm();
  return std::sqrt(std::max(0.0, e_sq - shift));
}

Eigen::VectorXd transverse_error(const Eigen::VectorXd& x, int node_count, int state_dim) {
  Eigen::VectorXd e((node_count - 1) * state_dim);
  for (int i = 1; i < node_count; ++i) {
    e.segment((i - 1) * state_dim, state_dim) =
        x.segment(i * state_dim, state_dim) - x.head(state_dim);
  }
  return e;
}

Trace integrate(const ExperimentConfig& cfg) {
  if (cfg.controller == nullptr) throw_usage("experiment needs a controller");
  const int N = cfg.node_count;
  const int n = cfg.system.state_dim;
  if (cfg.x0.size() != N * n) {
    throw_usage("initial state has " + std::to_string(cfg.x0.size()) + " entries, expected " +
                std::to_string(N * n));
  }
  if (cfg.dt <= 0.0) throw_usage("step size must be positive");
  if (cfg.T <= 0.0) throw_usage("horizon must be positive");
  const int decimate = std::max(1, cfg.decimate);

  const auto& phi = cfg.controller->phi;
  const int p = cfg.controller->input_dim;
  const VectorFn f = cfg.system.f;
  const MatrixFn g = cfg.system.g;
  const VectorFn field = [&phi, &f, &g, N, n, p](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const Eigen::VectorXd u = phi(x);
    Eigen::VectorXd dx(x.size());
    for (int i = 0; i < N; ++i) {
      const Eigen::VectorXd xi = x.segment(i * n, n);
      dx.segment(i * n, n) = f(xi) + g(xi) * u.segment(i * p, p);
    }
    return dx;
  };

  Trace trace;
  trace.node_count = N;
  trace.state_dim = n;
  const long steps = std::lround(cfg.T / cfg.dt);
  Eigen::VectorXd x = cfg.x0;
  double t = 0.0;
  const auto record = [&](double time, const Eigen::VectorXd& state) {
    trace.t.push_back(time);
    trace.x.push_back(state);
    trace.dist.push_back(sync_distance(state, N, n));
    trace.norm_e.push_back(transverse_error(state, N, n).norm());
    trace.u_norm.push_back(phi(state).norm());
  };
  record(t, x);
  for (long k = 1; k <= steps; ++k) {
    x = rk4_step(field, x, cfg.dt);
    t = k * cfg.dt;
    if (!x.allFinite()) {
      trace.blew_up = true;
      trace.escape_time = trace.t.back();
      break;
    }
    if (k % decimate == 0 || k == steps) record(t, x);
  }
  return trace;
}

double lyapunov_series(Trace& trace, const Eigen::MatrixXd& P) {
  trace.V.clear();
  trace.V.reserve(trace.x.size());
  const int N = trace.node_count;
  const int n = trace.state_dim;
  for (const Eigen::VectorXd& x : trace.x) {
    const Eigen::VectorXd e = transverse_error(x, N, n);
    double v = 0.0;
    for (int i = 0; i < N - 1; ++i) {
      const Eigen::VectorXd ei = e.segment(i * n, n);
      v += ei.dot(P * ei);
    }
    trace.V.push_back(v);
  }
  double worst_increment = 0.0;
  for (std::size_t k = 1; k < trace.V.size(); ++k) {
    worst_increment = std::max(worst_increment, trace.V[k] - trace.V[k - 1]);
  }
  return worst_increment;
}

RateFit fit_exponential(const std::vector<double>& t, const std::vector<double>& y,
                        double window_lo, double window_hi) {
  if (t.size() != y.size()) throw_usage("rate fit needs matching time and value series");
  if (window_hi <= window_lo) throw_usage("rate-fit window is empty");
  RateFit fit;
  fit.window_lo = window_lo;
  fit.window_hi = window_hi;

  std::vector<double> ts, logs;
  bool saw_floor = false;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < window_lo || t[k] > window_hi) continue;
    if (!(y[k] > kDistanceFloor)) {
      saw_floor = true;
      break;  // fit on the prefix; later samples are round-off noise
    }
    ts.push_back(t[k]);
    logs.push_back(std::log(y[k]));
  }
  fit.truncated = saw_floor;
  const std::size_t m = ts.size();
  if (m < 2) {
    // Degenerate window: report a flat fit rather than failing, so floor-level
    // traces (already synchronized) read as lambda = 0.
    fit.lambda = 0.0;
    fit.k = 1.0;
    fit.r_squared = 1.0;
    return fit;
  }
  double st = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    st += ts[k];
    sy += logs[k];
  }
  const double mt = st / m, my = sy / m;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    stt += (ts[k] - mt) * (ts[k] - mt);
    sty += (ts[k] - mt) * (logs[k] - my);
    syy += (logs[k] - my) * (logs[k] - my);
  }
  if (stt == 0.0) {
    fit.lambda = 0.0;
    fit.k = std::exp(my);
    fit.r_squared = 1.0;
    return fit;
  }
  const double slope = sty / stt;
  const double intercept = my - slope * mt;
  fit.lambda = -slope;
  const double y0 = y.empty() ? 1.0 : y.front();
  fit.k = y0 > kDistanceFloor ? std::exp(intercept) / y0 : std::exp(intercept);
  // Constancy must be detected up to rounding: summing identical samples
  // leaves syy at the square of a few ulps, not exactly zero.
  const double constancy = 1e-20 * static_cast<double>(m) * std::max(1.0, my * my);
  if (syy <= constancy) {
    fit.r_squared = 1.0;  // constant series: the flat line is exact
  } else {
    fit.r_squared = (sty * sty) / (stt * syy);
  }
  return fit;
}

RateFit fit_rate(const Trace& trace, double window_lo, double window_hi) {
  return fit_exponential(trace.t, trace.dist, window_lo, window_hi);
}

double sandwich_violation(const Trace& trace) {
  const double upper = std::sqrt(2.0 * (trace.node_count - 1));
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < trace.t.size(); ++k) {
    const double d = trace.dist[k];
    const double e = trace.norm_e[k];
    worst = std::max(worst, d - e);                   // |x|_D <= |e|
    worst = std::max(worst, e - upper * d - 1e-12);   // |e| <= sqrt(2(N-1))|x|_D
  }
  return worst;
}

}  // namespace synckit
