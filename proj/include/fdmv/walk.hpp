#pragma once

#include <cstdint>

#include "fdmv/common.hpp"
#include "fdmv/graph.hpp"

namespace fdmv {

/// Walker dynamics on a lattice of step delta_tau. The walker waits n steps
/// with P(n) = d_alpha n^{-(1+alpha)} on n >= 1, then leaves for neighbour j
/// with probability move_probability() * W_ij / d_i, otherwise stays put.
///
/// `markov` switches to the alpha -> 1 limit object: exponential(1) holding
/// times followed by a jump to a neighbour with probability W_ij / d_i.
struct WalkConfig {
  double alpha = 0.5;
  double t_end = 1.0;
  double delta_tau = 1e-4;
  std::int64_t n_walkers = 100000;
  std::uint64_t seed = 0;
  int threads = 1;
  bool markov = false;

  /// d_alpha = 1 / zeta(1 + alpha).
  double normalization() const;
  /// (delta_tau)^alpha d_alpha |Gamma(-alpha)|.
  double move_probability() const;
  void validate() const;
};

/// Fraction of walkers at each node at time t_end, all walkers started at `start`.
Vector random_walk_sim(const Graph& g, const WalkConfig& cfg, Index start);

/// Occupancy law of the limiting process: row `start` of E_alpha(-(I - D^{-1}W) t^alpha),
/// computed through the symmetric basis as e_s^T D^{-1/2} U e_alpha(Lambda, t) U^T D^{1/2}.
Vector walk_reference(const Graph& g, double alpha, double t, Index start);

/// 0.5 * sum |p - q|.
double tv_distance(const Vector& p, const Vector& q);

/// Zipf(1 + alpha) variate on {1, 2, ...} by Devroye's rejection method.
/// Returns +inf when the draw exceeds the double range of exact integers.
double sample_waiting_steps(double alpha, std::mt19937_64& rng);

}  // namespace fdmv
