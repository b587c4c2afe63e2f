#include "fdmv/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>
#include <utility>

namespace fdmv {

Graph::Graph(Matrix adjacency) : adjacency_(std::move(adjacency)) {
  require(adjacency_.rows() == adjacency_.cols(), "adjacency must be square");
  require(adjacency_.allFinite(), "adjacency must be finite");
  require((adjacency_.array() >= 0.0).all(), "adjacency must be nonnegative");
  require(adjacency_ == adjacency_.transpose(), "adjacency must be symmetric");
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  for (Index i = 0; i < n_nodes(); ++i)
    for (Index j = i; j < n_nodes(); ++j)
      if (adjacency_(i, j) > 0.0) out.push_back({i, j, adjacency_(i, j)});
  return out;
}

Index Graph::n_edges() const {
  Index count = 0;
  for (Index i = 0; i < n_nodes(); ++i)
    for (Index j = i; j < n_nodes(); ++j)
      if (adjacency_(i, j) > 0.0) ++count;
  return count;
}

std::vector<Index> Graph::components(Index* n_components) const {
  const Index n = n_nodes();
  std::vector<Index> comp(static_cast<std::size_t>(n), -1);
  Index next = 0;
  for (Index s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::queue<Index> q;
    q.push(s);
    comp[s] = next;
    while (!q.empty()) {
      const Index u = q.front();
      q.pop();
      for (Index v = 0; v < n; ++v) {
        if (adjacency_(u, v) > 0.0 && comp[v] < 0) {
          comp[v] = next;
          q.push(v);
        }
      }
    }
    ++next;
  }
  if (n_components) *n_components = next;
  return comp;
}

Index Graph::n_components() const {
  Index count = 0;
  components(&count);
  return count;
}

Graph build_graph(Index n, std::span<const Edge> edges) {
  require(n > 0, "graph needs at least one node");
  // Directed pass first so that duplicates resolve as "last wins".
  std::map<std::pair<Index, Index>, double> directed;
  for (const auto& e : edges) {
    require(e.src >= 0 && e.src < n && e.dst >= 0 && e.dst < n,
            "edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                ") out of range for n=" + std::to_string(n));
    require(std::isfinite(e.weight) && e.weight >= 0.0,
            "edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                ") has negative or non-finite weight");
    directed[{e.src, e.dst}] = e.weight;
  }
  Matrix a = Matrix::Zero(n, n);
  for (const auto& [key, w] : directed) {
    const auto [i, j] = key;
    a(i, j) = std::max(a(i, j), w);
    a(j, i) = std::max(a(j, i), w);
  }
  return Graph(std::move(a));
}

Matrix normalized_laplacian(const Graph& g) {
  const Index n = g.n_nodes();
  const Vector deg = g.degrees();
  Vector inv_sqrt(n);
  for (Index i = 0; i < n; ++i) inv_sqrt(i) = deg(i) > 0.0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  Matrix l = -(inv_sqrt.asDiagonal() * g.adjacency() * inv_sqrt.asDiagonal());
  l.diagonal().array() += 1.0;
  return l;
}

SpectralBasis eigendecompose(const Matrix& m) {
  require(m.rows() == m.cols(), "eigendecompose: matrix must be square");
  require(m.allFinite(), "eigendecompose: matrix must be finite");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          "eigendecompose: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecompose: solver failed");

  SpectralBasis basis{solver.eigenvalues(), solver.eigenvectors()};
  for (Index k = 0; k < basis.size(); ++k) {
    auto col = basis.eigenvectors.col(k);
    const double peak = col.cwiseAbs().maxCoeff();
    Index pivot = 0;
    while (std::abs(col(pivot)) < peak - 1e-12) ++pivot;
    if (col(pivot) < 0.0) col = -col;
  }
  return basis;
}

SpectralBasis spectral_basis(const Graph& g) {
  SpectralBasis b = eigendecompose(normalized_laplacian(g));
  // Roundoff can leave eigenvalues a hair outside [0, 2].
  for (Index i = 0; i < b.size(); ++i) {
    double& v = b.eigenvalues(i);
    if (v < 0.0 && v > -1e-10) v = 0.0;
    if (v > 2.0 && v < 2.0 + 1e-10) v = 2.0;
  }
  return b;
}

Vector gft(const SpectralBasis& basis, const Vector& signal) {
  require(signal.size() == basis.size(), "gft: signal length does not match basis");
  return basis.eigenvectors.transpose() * signal;
}

Vector igft(const SpectralBasis& basis, const Vector& coefficients) {
  require(coefficients.size() == basis.size(), "igft: coefficient length does not match basis");
  return basis.eigenvectors * coefficients;
}

Matrix gft(const SpectralBasis& basis, const Matrix& signals) {
  require(signals.rows() == basis.size(), "gft: signal rows do not match basis");
  return basis.eigenvectors.transpose() * signals;
}

Matrix igft(const SpectralBasis& basis, const Matrix& coefficients) {
  require(coefficients.rows() == basis.size(), "igft: coefficient rows do not match basis");
  return basis.eigenvectors * coefficients;
}

PerturbMode parse_perturb_mode(const std::string& name) {
  if (name == "add") return PerturbMode::add;
  if (name == "remove") return PerturbMode::remove;
  if (name == "both") return PerturbMode::both;
  throw ValidationError("unknown perturbation mode '" + name + "' (add|remove|both)");
}

namespace {

// Partial Fisher-Yates: first k entries of a uniform random permutation.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

Graph perturb_graph(const Graph& g, double ratio, PerturbMode mode, std::uint64_t seed) {
  require(std::isfinite(ratio) && ratio >= 0.0 && ratio <= 1.0, "perturb_graph: ratio must be in [0, 1]");
  const auto existing = g.edges();
  const auto k = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(existing.size())));
  if (mode != PerturbMode::add) require(!existing.empty(), "perturb_graph: cannot remove edges from an empty graph");

  std::mt19937_64 rng(mix_seed(seed));
  Matrix a = g.adjacency();

  std::vector<std::pair<Index, Index>> non_edges;
  if (mode != PerturbMode::remove) {
    for (Index i = 0; i < g.n_nodes(); ++i)
      for (Index j = i + 1; j < g.n_nodes(); ++j)
        if (a(i, j) == 0.0) non_edges.emplace_back(i, j);
    if (k > non_edges.size())
      throw ValidationError("perturb_graph: requested " + std::to_string(k) + " new edges but only " +
                            std::to_string(non_edges.size()) + " non-adjacent pairs exist");
  }

  if (mode != PerturbMode::add) {
    for (const auto& e : sample_without_replacement(existing, k, rng)) {
      a(e.src, e.dst) = 0.0;
      a(e.dst, e.src) = 0.0;
    }
  }
  if (mode != PerturbMode::remove) {
    for (const auto& [i, j] : sample_without_replacement(non_edges, k, rng)) {
      a(i, j) = 1.0;
      a(j, i) = 1.0;
    }
  }
  return Graph(std::move(a));
}

namespace {

Index parse_index(std::string_view tok, std::size_t line) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || v < 0)
    throw ValidationError("line " + std::to_string(line) + ": invalid node index '" + std::string(tok) + "'");
  return static_cast<Index>(v);
}

double parse_weight(const std::string& tok, std::size_t line) {
  std::size_t used = 0;
  double w = 0.0;
  try {
    w = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size() || !std::isfinite(w) || w < 0.0)
    throw ValidationError("line " + std::to_string(line) + ": invalid edge weight '" + tok + "'");
  return w;
}

}  // namespace

std::vector<Edge> parse_edge_list(std::istream& in, Index* max_index) {
  std::vector<Edge> edges;
  Index top = -1;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream fields(raw);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() < 2 || tok.size() > 3)
      throw ValidationError("line " + std::to_string(line_no) + ": expected 'src<TAB>dst[<TAB>weight]'");
    Edge e{parse_index(tok[0], line_no), parse_index(tok[1], line_no), 1.0};
    if (tok.size() == 3) e.weight = parse_weight(tok[2], line_no);
    top = std::max({top, e.src, e.dst});
    edges.push_back(e);
  }
  if (max_index) *max_index = top;
  return edges;
}

Graph read_edge_list(const std::string& path, Index n_nodes) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open edge list '" + path + "'");
  Index top = -1;
  auto edges = parse_edge_list(in, &top);
  const Index n = n_nodes > 0 ? n_nodes : top + 1;
  require(n > 0, "edge list '" + path + "' is empty and no node count was given");
  return build_graph(n, edges);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  out << "# n_nodes " << g.n_nodes() << '\n';
  out.precision(17);
  for (const auto& e : g.edges()) out << e.src << '\t' << e.dst << '\t' << e.weight << '\n';
}

}  // namespace fdmv
