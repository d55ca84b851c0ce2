#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

namespace synckit {

// Undirected communication topology. Edges are 1-based (i, j) pairs with the
// first endpoint taken as the positive end of the oriented incidence column.
// The Laplacian is assembled in integer arithmetic, so L*ones == 0 exactly.
class CommGraph {
public:
  CommGraph(int node_count, std::vector<std::pair<int, int>> edges,
            Eigen::MatrixXi incidence, Eigen::MatrixXi laplacian)
      : node_count_(node_count),
        edges_(std::move(edges)),
        incidence_(std::move(incidence)),
        laplacian_(std::move(laplacian)) {}

  int node_count() const { return node_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  const Eigen::MatrixXi& incidence_int() const { return incidence_; }
  const Eigen::MatrixXi& laplacian_int() const { return laplacian_; }
  Eigen::MatrixXd incidence() const { return incidence_.cast<double>(); }
  Eigen::MatrixXd laplacian() const { return laplacian_.cast<double>(); }

  // 1-based adjacency query.
  bool has_edge(int i, int j) const;

private:
  int node_count_;
  std::vector<std::pair<int, int>> edges_;
  Eigen::MatrixXi incidence_;  // N x M
  Eigen::MatrixXi laplacian_;  // N x N
};

// Coupling matrix A(c1) = -[L_{2:N,2:N} - c1 * ones * L_{1,2:N}] together
// with the largest mu such that A + A^T <= -mu I (0 when indefinite).
struct CouplingMatrix {
  double c1 = 0.0;
  Eigen::MatrixXd A;
  double mu = 0.0;
};

CommGraph build_graph(int node_count, const std::vector<std::pair<int, int>>& edges);

bool is_connected(const CommGraph& g);

// Eliminates node 1: Lbar = L_{2:N,2:N} - ones_{N-1} * L_{1,2:N}. Shares the
// nonzero spectrum of L; -Lbar is a stability matrix for connected graphs.
Eigen::MatrixXd reduced_laplacian(const CommGraph& g);

CouplingMatrix coupling_matrix(const CommGraph& g, double c1);

// Deterministic halving search from c1 = 1 for a certified negative-definite
// A(c1) + A(c1)^T. Fails below c1 = 2^-40 (disconnected or malformed graph).
CouplingMatrix find_c1(const CommGraph& g);

// Spectra (ascending). The Laplacian path uses a symmetric solver; the
// reduced matrix is nonsymmetric, so its (real) eigenvalues come from a
// general solver.
Eigen::VectorXd laplacian_spectrum(const CommGraph& g);
Eigen::VectorXd reduced_spectrum(const CommGraph& g);

// Tolerance used to split zero from nonzero Laplacian eigenvalues.
inline double zero_eigenvalue_tol(int node_count) { return 1e-9 * node_count; }

// Topology helpers used by tests and the config front end.
CommGraph path_graph(int n);
CommGraph ring_graph(int n);
CommGraph star_graph(int n);  // node 1 is the hub
CommGraph complete_graph(int n);
CommGraph random_connected_graph(int n, int extra_edges, std::uint64_t seed);

}  // namespace synckit
