#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fdmv/common.hpp"

namespace fdmv {

struct Edge {
  Index src = 0;
  Index dst = 0;
  double weight = 1.0;
};

/// Undirected weighted graph backed by a dense symmetric adjacency matrix.
///
/// Self-loops exist only when an edge (i, i) is given explicitly.
class Graph {
 public:
  Graph() = default;
  explicit Graph(Matrix adjacency);

  Index n_nodes() const { return adjacency_.rows(); }
  const Matrix& adjacency() const { return adjacency_; }
  double weight(Index i, Index j) const { return adjacency_(i, j); }
  double degree(Index i) const { return adjacency_.row(i).sum(); }
  Vector degrees() const { return adjacency_.rowwise().sum(); }

  /// Undirected edges with positive weight, i <= j, in row-major order.
  std::vector<Edge> edges() const;
  Index n_edges() const;

  /// Component id per node (BFS order, ids start at 0) and the component count.
  std::vector<Index> components(Index* n_components = nullptr) const;
  Index n_components() const;

  friend bool operator==(const Graph& a, const Graph& b) { return a.adjacency_ == b.adjacency_; }

 private:
  Matrix adjacency_;
};

/// Builds a graph from a directed edge list. Repeated (src, dst) pairs keep the
/// last weight; the two directions of a pair are then symmetrized by max.
Graph build_graph(Index n, std::span<const Edge> edges);

/// L = I - D^{-1/2} A D^{-1/2}. Isolated nodes get an identity row.
Matrix normalized_laplacian(const Graph& g);

struct SpectralBasis {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // column i pairs with eigenvalues(i)

  Index size() const { return eigenvalues.size(); }
};

/// Dense symmetric eigendecomposition with a deterministic sign rule: the
/// largest-magnitude entry of each eigenvector is positive (ties go to the
/// lowest index).
SpectralBasis eigendecompose(const Matrix& symmetric);

SpectralBasis spectral_basis(const Graph& g);

Vector gft(const SpectralBasis& basis, const Vector& signal);
Vector igft(const SpectralBasis& basis, const Vector& coefficients);
Matrix gft(const SpectralBasis& basis, const Matrix& signals);
Matrix igft(const SpectralBasis& basis, const Matrix& coefficients);

enum class PerturbMode { add, remove, both };

PerturbMode parse_perturb_mode(const std::string& name);

/// Random structural perturbation with k = floor(ratio * |E|) edge changes.
///
/// add: k new unit-weight edges among non-adjacent pairs.
/// remove: k existing edges dropped.
/// both: k edges dropped and k new edges added (new edges are drawn from pairs
/// that were non-adjacent in the input graph).
Graph perturb_graph(const Graph& g, double ratio, PerturbMode mode, std::uint64_t seed);

/// Edge-list text: `src<TAB>dst[<TAB>weight]` per line, `#` comments.
std::vector<Edge> parse_edge_list(std::istream& in, Index* max_index = nullptr);
Graph read_edge_list(const std::string& path, Index n_nodes = -1);
void write_edge_list(std::ostream& out, const Graph& g);

}  // namespace fdmv
