#include "core/graph.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace synckit {

bool CommGraph::has_edge(int i, int j) const {
  if (i < 1 || j < 1 || i > node_count_ || j > node_count_ || i == j) return false;
  return laplacian_(i - 1, j - 1) != 0;
}

CommGraph build_graph(int node_count, const std::vector<std::pair<int, int>>& edges) {
  if (node_count < 1) throw_usage("graph: node count must be positive");
  std::set<std::pair<int, int>> seen;
  for (const auto& [i, j] : edges) {
    if (i == j) {
      std::ostringstream os;
      os << "graph: self-loop at node " << i;
      throw_usage(os.str());
    }
    if (i < 1 || j < 1 || i > node_count || j > node_count) {
      std::ostringstream os;
      os << "graph: edge (" << i << "," << j << ") references a node outside 1.." << node_count;
      throw_usage(os.str());
    }
    const auto key = std::minmax(i, j);
    if (!seen.insert(key).second) {
      std::ostringstream os;
      os << "graph: duplicate edge (" << i << "," << j << ")";
      throw_usage(os.str());
    }
  }

  const int m = static_cast<int>(edges.size());
  Eigen::MatrixXi incidence = Eigen::MatrixXi::Zero(node_count, m);
  for (int k = 0; k < m; ++k) {
    incidence(edges[k].first - 1, k) = 1;    // positive end
    incidence(edges[k].second - 1, k) = -1;  // negative end
  }
  const Eigen::MatrixXi laplacian = incidence * incidence.transpose();
  return CommGraph(node_count, edges, std::move(incidence), laplacian);
}

bool is_connected(const CommGraph& g) {
  const int n = g.node_count();
  if (n == 1) return true;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& [i, j] : g.edges()) {
    adj[static_cast<std::size_t>(i - 1)].push_back(j - 1);
    adj[static_cast<std::size_t>(j - 1)].push_back(i - 1);
  }
  std::vector<char> reached(static_cast<std::size_t>(n), 0);
  std::vector<int> stack = {0};
  reached[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!reached[static_cast<std::size_t>(v)]) {
        reached[static_cast<std::size_t>(v)] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

Eigen::MatrixXd reduced_laplacian(const CommGraph& g) {
  const int n = g.node_count();
  if (n < 2) throw_usage("reduced_laplacian: needs at least 2 nodes");
  const Eigen::MatrixXd L = g.laplacian();
  const Eigen::MatrixXd tail = L.block(1, 1, n - 1, n - 1);
  const Eigen::RowVectorXd first_row_tail = L.block(0, 1, 1, n - 1);
  return tail - Eigen::VectorXd::Ones(n - 1) * first_row_tail;
}

CouplingMatrix coupling_matrix(const CommGraph& g, double c1) {
  const int n = g.node_count();
  if (n < 2) throw_usage("coupling_matrix: needs at least 2 nodes");
  if (c1 <= 0.0) throw_usage("coupling_matrix: c1 must be positive");
  const Eigen::MatrixXd L = g.laplacian();
  const Eigen::MatrixXd tail = L.block(1, 1, n - 1, n - 1);
  const Eigen::RowVectorXd first_row_tail = L.block(0, 1, 1, n - 1);

  CouplingMatrix out;
  out.c1 = c1;
  out.A = -(tail - c1 * Eigen::VectorXd::Ones(n - 1) * first_row_tail);
  const Eigen::MatrixXd sym = out.A + out.A.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const double lambda_max = es.eigenvalues().maxCoeff();
  // Eigenvalues that are exactly zero in exact arithmetic (disconnected
  // graphs) round to either side of zero; snap those to "no margin" so a
  // -1e-16 never certifies negative definiteness.
  const double noise = 1e-13 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  out.mu = (-lambda_max > noise) ? -lambda_max : 0.0;
  return out;
}

CouplingMatrix find_c1(const CommGraph& g) {
  double c1 = 1.0;
  const double floor = std::ldexp(1.0, -40);
  while (c1 >= floor) {
    CouplingMatrix cm = coupling_matrix(g, c1);
    if (cm.mu > 0.0) return cm;
    c1 *= 0.5;
  }
  throw_numeric("find_c1: no c1 in [2^-40, 1] makes A(c1)+A(c1)^T negative definite; "
                "graph is likely disconnected");
}

Eigen::VectorXd laplacian_spectrum(const CommGraph& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.laplacian());
  return es.eigenvalues();
}

Eigen::VectorXd reduced_spectrum(const CommGraph& g) {
  const Eigen::MatrixXd lbar = reduced_laplacian(g);
  Eigen::EigenSolver<Eigen::MatrixXd> es(lbar);
  Eigen::VectorXd vals = es.eigenvalues().real();
  std::sort(vals.data(), vals.data() + vals.size());
  return vals;
}

CommGraph path_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) edges.emplace_back(i, i + 1);
  return build_graph(n, edges);
}

CommGraph ring_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) edges.emplace_back(i, i + 1);
  if (n > 2) edges.emplace_back(n, 1);
  return build_graph(n, edges);
}

CommGraph star_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 2; i <= n; ++i) edges.emplace_back(1, i);
  return build_graph(n, edges);
}

CommGraph complete_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) edges.emplace_back(i, j);
  return build_graph(n, edges);
}

CommGraph random_connected_graph(int n, int extra_edges, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<int, int>> edges;
  std::set<std::pair<int, int>> seen;
  // Random spanning tree: attach each node to an earlier one.
  for (int i = 2; i <= n; ++i) {
    const int j = rng.uniform_int(1, i - 1);
    edges.emplace_back(j, i);
    seen.insert({j, i});
  }
  const int max_edges = n * (n - 1) / 2;
  int added = 0;
  int attempts = 0;
  while (added < extra_edges && static_cast<int>(edges.size()) < max_edges && attempts < 64 * n) {
    ++attempts;
    int i = rng.uniform_int(1, n);
    int j = rng.uniform_int(1, n);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (seen.insert({i, j}).second) {
      edges.emplace_back(i, j);
      ++added;
    }
  }
  return build_graph(n, edges);
}

}  // namespace synckit
