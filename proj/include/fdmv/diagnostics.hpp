#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fdmv/common.hpp"
#include "fdmv/graph.hpp"
#include "fdmv/io.hpp"
#include "fdmv/special.hpp"

namespace fdmv {

// ---- linear probe ----

struct ProbeConfig {
  double l2_weight = 1e-4;
  int epochs = 500;
  double lr = 1.0;  // in units of 1 / (smoothness constant of the loss)
  std::uint64_t seed = 0;

  void validate() const;
};

/// Accuracies in [0, 1]; NaN for an empty split.
struct ProbeResult {
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
};

/// L2-regularized multinomial logistic regression on train-centered features,
/// full-batch gradient descent from zero weights.
ProbeResult linear_probe(const Matrix& y, const std::vector<int>& labels, const Splits& splits,
                         const ProbeConfig& cfg = {});

// ---- embedding quality ----

struct ClassRatio {
  bool defined = false;
  double r = 0.0;
  double d_intra = 0.0;
  double d_inter = 0.0;
  Index members = 0;
  std::string flag;  // "too_few_members" or "zero_intra_distance" when undefined
};

/// r_c = mean distance from class c to other classes / mean distance within c.
std::map<int, ClassRatio> rc_ratio(const Matrix& y, const std::vector<int>& labels);

/// Eigenvalues of the centered covariance (1/N), descending.
Vector energy_spectrum(const Matrix& y);

/// Smallest k whose top-k spectrum mass reaches theta of the total (0 for a constant Y).
Index effective_rank(const Matrix& y, double theta = 0.9);

/// m_i = || row i of U^T Y ||_2.
Vector fourier_spread(const SpectralBasis& basis, const Matrix& y);

/// Per-graph mean of node rows; assignment[i] is the graph id of node i.
Matrix mean_pool_readout(const Matrix& y, const std::vector<Index>& assignment);

// ---- large-time spectral theorem check ----

struct TheoremView {
  double alpha = 0.0;
  int order = 0;               // n_s: number of expansion terms with j alpha < 1
  Vector exact;                // 1 + e + ... + e^m, e = e_alpha(lambda_i, tau)
  Vector asymptotic;           // 1 + sum_j b_ij tau^{-j alpha}
  Matrix b;                    // N x order; NaN on zero frequencies
  Vector output_coefficients;  // |multiplier * c_i| for the probe signal
};

struct SpectralReport {
  double tau = 0.0;
  int m = 0;
  AsymptoticSign sign = AsymptoticSign::alternating;
  double tolerance = 0.1;
  Vector eigenvalues;
  TheoremView local, global;
  bool positivity = true;
  bool monotone = true;
  bool ordering = true;
  bool agreement = true;
  double max_relative_error = 0.0;
  std::vector<std::string> violations;

  bool passed() const { return positivity && monotone && ordering && agreement; }
};

/// Coefficients b_j of 1 + sum_{k=1}^m e^k expanded in powers of tau^{-alpha},
/// with e replaced by its n-term large-time expansion; returned for j = 1..n.
Vector skip_expansion_coefficients(double alpha, double lambda, int m, int n,
                                   AsymptoticSign sign = AsymptoticSign::alternating);

SpectralReport check_theorem_sgi(const SpectralBasis& basis, const Vector& x, double alpha_l, double alpha_g,
                                 double tau, int m, AsymptoticSign sign = AsymptoticSign::alternating,
                                 double tolerance = 0.1);

// ---- stability ----

struct StabilityCurve {
  std::vector<double> times;
  std::vector<double> discrepancy;
  double epsilon = 0.0;
  double bound_alpha = 1.0;
  double fitted_C = 0.0;     // from the smallest time
  std::vector<double> bound;  // C eps t^{alpha - 1}
  bool bound_holds = true;
};

/// One encoder channel of a bank: diffusion order and combination weight.
struct Channel {
  double alpha = 1.0;
  double beta = 1.0;
};

/// || sum_k beta_k (S_a^{alpha_k}(t) Ya - S_b^{alpha_k}(t) Yb) ||_F over the time grid,
/// with S^alpha(t) = U diag(e_alpha(lambda, t)) U^T. The bound exponent uses the
/// largest alpha.
StabilityCurve discrepancy_curve(const SpectralBasis& a, const Matrix& ya, const SpectralBasis& b, const Matrix& yb,
                                 std::span<const Channel> channels, std::span<const double> times, double epsilon);

/// Initial state moved by eps * direction / ||direction||_F.
StabilityCurve stability_init_state(const SpectralBasis& basis, const Matrix& y0, const Matrix& direction,
                                    double eps, std::span<const Channel> channels, std::span<const double> times);

/// Projection weights W -> W + dW; eps = ||X dW||_F.
StabilityCurve stability_weights(const SpectralBasis& basis, const Matrix& x, const Matrix& w, const Matrix& dw,
                                 std::span<const Channel> channels, std::span<const double> times);

/// Edge additions/removals; eps = ||(L - L~) Y0||_F.
StabilityCurve stability_topology(const Graph& g, const Matrix& y0, double ratio, PerturbMode mode,
                                  std::uint64_t seed, std::span<const Channel> channels,
                                  std::span<const double> times);

}  // namespace fdmv
