#include "core/synthesis.hpp"

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

double max_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// Stacked probe states for the sparsity check: agents get distinct sample
// points so cross couplings cannot cancel by coincidence.
Eigen::VectorXd stacked_probe(const SampleSet& probes, int index, int node_count, int dim) {
  Eigen::VectorXd x(node_count * dim);
  const auto& pts = probes.points();
  for (int i = 0; i < node_count; ++i) {
    x.segment(i * dim, dim) = pts[(index * node_count + i) % pts.size()];
  }
  return x;
}

}  // namespace

LyapunovMargin solve_lyapunov_margin(const Eigen::MatrixXd& A) {
  const int d = static_cast<int>(A.rows());
  if (d == 0 || A.cols() != d) {
    throw_usage("Lyapunov solve needs a square nonempty matrix");
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  for (int i = 0; i < d; ++i) {
    const std::complex<double> lam = es.eigenvalues()[i];
    if (lam.real() >= 0.0) {
      std::ostringstream msg;
      msg << "matrix is not a stability matrix: eigenvalue " << lam.real();
      if (lam.imag() != 0.0) msg << (lam.imag() > 0 ? "+" : "") << lam.imag() << "i";
      msg << " has nonnegative real part";
      throw_numeric(msg.str());
    }
  }
  // vec(S A) = (A^T (x) I) vec(S), vec(A^T S) = (I (x) A^T) vec(S).
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      K.block(i * d, j * d, d, d) = A(j, i) * I;  // A^T (x) I
    }
    K.block(i * d, i * d, d, d) += A.transpose();  // I (x) A^T
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d * d);
  for (int i = 0; i < d; ++i) rhs[i * d + i] = -1.0;
  const Eigen::VectorXd vecS = K.partialPivLu().solve(rhs);
  Eigen::MatrixXd S = Eigen::Map<const Eigen::MatrixXd>(vecS.data(), d, d);
  S = 0.5 * (S + S.transpose()).eval();
  const double residual = (S * A + A.transpose() * S + I).cwiseAbs().maxCoeff();
  if (!S.allFinite() || residual > 1e-8) {
    throw_numeric("Lyapunov solve failed (residual " + std::to_string(residual) + ")");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym(S, Eigen::EigenvaluesOnly);
  const double smin = sym.eigenvalues().minCoeff();
  const double smax = sym.eigenvalues().maxCoeff();
  if (smin <= 0.0) {
    throw_numeric("Lyapunov solution is not positive definite (lambda_min = " +
                  std::to_string(smin) + ")");
  }
  return {S, 1.0 / smax};
}

double local_min_gain(double rho, double nu) {
  if (rho <= 0.0 || nu <= 0.0) {
    throw_usage("gain floor needs positive rho and nu (got rho = " + std::to_string(rho) +
                ", nu = " + std::to_string(nu) + ")");
  }
  return rho / nu;
}

SyncController make_local_controller(const CommGraph& graph, const MetricCertificate& cert,
                                     std::optional<double> gain, double safety,
                                     bool override_gain) {
  if (!is_connected(graph)) {
    throw_verdict("cannot synthesize a diffusive law on a disconnected graph");
  }
  const LyapunovMargin margin = solve_lyapunov_margin(-reduced_laplacian(graph));
  const double floor = local_min_gain(cert.rho, margin.nu);
  double ell = gain.value_or(safety * floor);
  bool overridden = false;
  if (ell < floor) {
    if (!override_gain) {
      std::ostringstream msg;
      msg << "gain " << ell << " is below the certified floor " << floor
          << "; pass the override flag to force it";
      throw_verdict(msg.str());
    }
    overridden = true;
  }

  SyncController ctrl;
  ctrl.kind = SyncController::Kind::local;
  ctrl.node_count = graph.node_count();
  ctrl.state_dim = cert.dim;
  ctrl.input_dim = 0;  // filled below from alpha's length
  ctrl.laplacian = graph.laplacian();
  ctrl.weights = Eigen::VectorXd::Ones(graph.node_count());
  ctrl.gain = {margin.S, margin.nu, floor, ell, 0.0, 0.0, overridden};

  const Eigen::MatrixXd L = ctrl.laplacian;
  const int N = ctrl.node_count;
  const int n = ctrl.state_dim;
  const ScalarFn U = cert.U;
  const VectorFn alpha = cert.alpha;
  // Probe alpha once to size the input block.
  ctrl.input_dim = static_cast<int>(alpha(Eigen::VectorXd::Zero(n)).size());
  const int p = ctrl.input_dim;
  ctrl.phi = [L, U, alpha, N, n, p, ell](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd potentials(N);
    for (int i = 0; i < N; ++i) potentials[i] = U(x.segment(i * n, n));
    Eigen::VectorXd u(N * p);
    for (int i = 0; i < N; ++i) {
      // sum_j L_ij U(x_j) = sum_{j != i} L_ij (U(x_j) - U(x_i)): exact zero
      // when all agents agree.
      double coupling = 0.0;
      for (int j = 0; j < N; ++j) {
        if (j == i || L(i, j) == 0.0) continue;
        coupling += L(i, j) * (potentials[j] - potentials[i]);
      }
      u.segment(i * p, p) = -ell * coupling * alpha(x.segment(i * n, n));
    }
    return u;
  };
  return ctrl;
}

VerificationReport global_block_check(const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                                      const ControlAffineSystem& sys, const SampleSet& samples,
                                      const Eigen::MatrixXd& Q, double mu, double ell,
                                      std::optional<double> tol) {
  VerificationReport report;
  report.property = "coupled-feedback block inequality";
  const Eigen::MatrixXd feedback = 2.0 * ell * mu * P * G * G.transpose() * P;
  for (const Eigen::VectorXd& z : samples.points()) {
    const Eigen::MatrixXd J = sys.jacobian_f(z);
    report.observe(max_eigenvalue(P * J + J.transpose() * P - feedback + Q), z);
  }
  report.finalize(tol.value_or(sys.has_analytic_jacobian() ? kTolAnalytic : kTolFiniteDiff));
  return report;
}

double global_min_gain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                       const ControlAffineSystem& sys, const SampleSet& samples,
                       const Eigen::MatrixXd& Q, double mu, double rel_tol) {
  if (mu <= 0.0) {
    throw_verdict("coupling margin mu must be positive for the linear-feedback law");
  }
  const auto feasible = [&](double ell) {
    return global_block_check(P, G, sys, samples, Q, mu, ell).pass;
  };
  double hi = 1.0;
  while (!feasible(hi)) {
    hi *= 2.0;
    if (hi > std::ldexp(1.0, 40)) {
      throw_verdict("no feasible gain up to 2^40; the block inequality cannot be met on the box");
    }
  }
  double lo = hi / 2.0;
  if (!feasible(lo)) {
    // Monotonicity: bisect the feasibility threshold in [lo, hi].
    while ((hi - lo) > rel_tol * hi) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
  }
  // Already feasible at 1/2; shrink down.
  while (feasible(lo / 2.0) && lo > 1e-12) lo /= 2.0;
  double lo2 = lo / 2.0, hi2 = lo;
  while ((hi2 - lo2) > rel_tol * hi2) {
    const double mid = 0.5 * (lo2 + hi2);
    (feasible(mid) ? hi2 : lo2) = mid;
  }
  return hi2;
}

SyncController make_global_controller(const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                                      const CommGraph& graph, const ControlAffineSystem& sys,
                                      const SampleSet& samples, const Eigen::MatrixXd& Q,
                                      const CouplingMatrix& coupling, std::optional<double> gain,
                                      double safety, bool override_gain) {
  if (coupling.mu <= 0.0) {
    throw_verdict("coupling margin mu = " + std::to_string(coupling.mu) +
                  " is not positive; pick a smaller c1 or a connected graph");
  }
  double ell;
  bool overridden = false;
  if (gain.has_value()) {
    ell = *gain;
    const VerificationReport block =
        global_block_check(P, G, sys, samples, Q, coupling.mu, ell);
    if (!block.pass) {
      if (!override_gain) {
        std::ostringstream msg;
        msg << "block inequality fails at gain " << ell << ": margin " << block.worst_margin
            << " at " << point_to_string(block.worst_point);
        throw_verdict(msg.str());
      }
      overridden = true;
    }
  } else {
    ell = safety * global_min_gain(P, G, sys, samples, Q, coupling.mu);
  }

  SyncController ctrl;
  ctrl.kind = SyncController::Kind::global;
  ctrl.node_count = graph.node_count();
  ctrl.state_dim = static_cast<int>(P.rows());
  ctrl.input_dim = static_cast<int>(G.cols());
  ctrl.laplacian = graph.laplacian();
  ctrl.weights = Eigen::VectorXd::Ones(graph.node_count());
  ctrl.weights[0] = coupling.c1;
  ctrl.gain = {Eigen::MatrixXd(), 0.0, 0.0, ell, coupling.c1, coupling.mu, overridden};

  const Eigen::MatrixXd L = ctrl.laplacian;
  const Eigen::MatrixXd GtP = G.transpose() * P;  // p x n
  const Eigen::VectorXd c = ctrl.weights;
  const int N = ctrl.node_count;
  const int n = ctrl.state_dim;
  const int p = ctrl.input_dim;
  ctrl.phi = [L, GtP, c, N, n, p, ell](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd u(N * p);
    for (int i = 0; i < N; ++i) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
      for (int j = 0; j < N; ++j) {
        if (j == i || L(i, j) == 0.0) continue;
        acc += L(i, j) * (x.segment(j * n, n) - x.segment(i * n, n));
      }
      u.segment(i * p, p) = -ell * c[i] * (GtP * acc);
    }
    return u;
  };
  return ctrl;
}

StructuralReport structural_checks(const SyncController& controller, const CommGraph& graph,
                                   const SampleSet& probes, double locality_tol,
                                   double manifold_tol, int max_jacobian_probes) {
  if (probes.empty()) throw_usage("structural checks need at least one probe state");
  StructuralReport out;
  out.locality.property = "neighbour-only dependence";
  out.manifold_zero.property = "zero input on the synchronization manifold";

  const int N = controller.node_count;
  const int n = controller.state_dim;
  const int p = controller.input_dim;

  for (const Eigen::VectorXd& z : probes.points()) {
    Eigen::VectorXd x(N * n);
    for (int i = 0; i < N; ++i) x.segment(i * n, n) = z;
    out.manifold_zero.observe(controller.phi(x).cwiseAbs().maxCoeff(), z);
  }
  out.manifold_zero.finalize(manifold_tol);

  const int probe_count = std::min(static_cast<int>(probes.size()), max_jacobian_probes);
  for (int k = 0; k < probe_count; ++k) {
    const Eigen::VectorXd x = stacked_probe(probes, k, N, n);
    const Eigen::MatrixXd jac = fd_jacobian(controller.phi, x, 1e-5);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        if (i == j || graph.has_edge(i + 1, j + 1)) continue;
        const double leak = jac.block(i * p, j * n, p, n).cwiseAbs().maxCoeff();
        out.locality.observe(leak, x);
      }
    }
  }
  if (out.locality.samples_checked == 0) {
    // Complete graphs impose no sparsity constraint.
    out.locality.observe(0.0, probes.points().front());
  }
  out.locality.finalize(locality_tol);

  out.pass = out.locality.pass && out.manifold_zero.pass;
  return out;
}

}  // namespace synckit
