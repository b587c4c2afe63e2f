#include "fdmv/walk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include <boost/math/special_functions/zeta.hpp>

#include "fdmv/fde.hpp"
#include "fdmv/special.hpp"

namespace fdmv {

double WalkConfig::normalization() const { return 1.0 / boost::math::zeta(1.0 + alpha); }

double WalkConfig::move_probability() const {
  return std::pow(delta_tau, alpha) * normalization() * std::abs(gamma(-alpha));
}

void WalkConfig::validate() const {
  require(std::isfinite(t_end) && t_end >= 0.0, "walk: t_end must be finite and >= 0");
  require(n_walkers >= 1, "walk: n_walkers must be >= 1");
  require(threads >= 1, "walk: threads must be >= 1");
  if (markov) return;
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0,
          "walk: alpha must lie in (0, 1); use the markov mode for alpha = 1");
  require(std::isfinite(delta_tau) && delta_tau > 0.0, "walk: delta_tau must be > 0");
  const double p = move_probability();
  require(p <= 1.0, "walk: move probability " + std::to_string(p) + " exceeds 1; decrease delta_tau");
}

double sample_waiting_steps(double alpha, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double b = std::pow(2.0, alpha);
  constexpr double kLimit = 9.0e15;
  for (;;) {
    const double u = 1.0 - unit(rng);  // (0, 1]
    const double v = unit(rng);
    const double x = std::floor(std::pow(u, -1.0 / alpha));
    if (!(x < kLimit)) return std::numeric_limits<double>::infinity();
    const double t = std::pow(1.0 + 1.0 / x, alpha);
    if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return x;
  }
}

namespace {

struct Neighbours {
  std::vector<std::vector<Index>> node;
  std::vector<std::vector<double>> cumulative;

  Index step(Index at, std::mt19937_64& rng) const {
    const auto& c = cumulative[static_cast<std::size_t>(at)];
    const double r = std::uniform_real_distribution<double>(0.0, c.back())(rng);
    const auto k = std::upper_bound(c.begin(), c.end(), r) - c.begin();
    return node[static_cast<std::size_t>(at)][static_cast<std::size_t>(std::min<std::ptrdiff_t>(k, std::ssize(c) - 1))];
  }
};

Neighbours neighbour_tables(const Graph& g) {
  Neighbours out;
  const Index n = g.n_nodes();
  for (Index i = 0; i < n; ++i) {
    std::vector<Index> nodes;
    std::vector<double> cumulative;
    double total = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j != i && g.weight(i, j) > 0.0) {
        nodes.push_back(j);
        cumulative.push_back(total += g.weight(i, j));
      }
    }
    out.node.push_back(std::move(nodes));
    out.cumulative.push_back(std::move(cumulative));
  }
  return out;
}

Index run_walker(const Neighbours& nb, const WalkConfig& cfg, double p_move, double horizon, Index start,
                 std::mt19937_64& rng) {
  Index at = start;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (cfg.markov) {
    std::exponential_distribution<double> hold(1.0);
    double t = hold(rng);
    while (t <= cfg.t_end) {
      if (!nb.node[at].empty()) at = nb.step(at, rng);
      t += hold(rng);
    }
    return at;
  }
  double steps = 0.0;
  for (;;) {
    steps += sample_waiting_steps(cfg.alpha, rng);
    if (!(steps <= horizon)) return at;
    if (unit(rng) < p_move && !nb.node[at].empty()) at = nb.step(at, rng);
  }
}

}  // namespace

Vector random_walk_sim(const Graph& g, const WalkConfig& cfg, Index start) {
  cfg.validate();
  const Index n = g.n_nodes();
  require(start >= 0 && start < n, "walk: start node " + std::to_string(start) + " out of range");
  Vector dist = Vector::Zero(n);
  if (cfg.t_end == 0.0) {
    dist(start) = 1.0;
    return dist;
  }

  const Neighbours nb = neighbour_tables(g);
  const double p_move = cfg.markov ? 1.0 : cfg.move_probability();
  // Number of whole lattice steps that fit in [0, t_end].
  const double horizon = cfg.markov ? 0.0 : std::floor(cfg.t_end / cfg.delta_tau * (1.0 + 1e-12));

  const auto workers = static_cast<std::int64_t>(std::min<std::int64_t>(cfg.threads, cfg.n_walkers));
  std::vector<std::vector<std::int64_t>> counts(static_cast<std::size_t>(workers),
                                                std::vector<std::int64_t>(static_cast<std::size_t>(n), 0));
  {
    std::vector<std::jthread> pool;
    for (std::int64_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        const std::int64_t lo = cfg.n_walkers * w / workers, hi = cfg.n_walkers * (w + 1) / workers;
        auto& mine = counts[static_cast<std::size_t>(w)];
        for (std::int64_t k = lo; k < hi; ++k) {
          auto rng = derive_stream(cfg.seed, "walk", static_cast<std::uint64_t>(k));
          ++mine[static_cast<std::size_t>(run_walker(nb, cfg, p_move, horizon, start, rng))];
        }
      });
    }
  }
  for (const auto& c : counts)
    for (Index i = 0; i < n; ++i) dist(i) += static_cast<double>(c[static_cast<std::size_t>(i)]);
  return dist / static_cast<double>(cfg.n_walkers);
}

Vector walk_reference(const Graph& g, double alpha, double t, Index start) {
  const Index n = g.n_nodes();
  require(start >= 0 && start < n, "walk_reference: start node out of range");
  const Vector deg = g.degrees();
  require((deg.array() > 0.0).all(), "walk_reference: graph has an isolated node");
  const SpectralBasis basis = spectral_basis(g);
  const Vector mult = diffusion_multipliers(basis.eigenvalues, alpha, t);
  const Vector sqrt_deg = deg.cwiseSqrt();
  Vector row = (basis.eigenvectors.row(start).transpose().cwiseProduct(mult)).transpose() *
               basis.eigenvectors.transpose();
  return row.cwiseProduct(sqrt_deg) / sqrt_deg(start);
}

double tv_distance(const Vector& p, const Vector& q) {
  require(p.size() == q.size(), "tv_distance: size mismatch");
  return 0.5 * (p - q).cwiseAbs().sum();
}

}  // namespace fdmv
