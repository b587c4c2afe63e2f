#pragma once

#include <optional>

namespace fdmv {

/// Controls how e_alpha(lambda, t) = E_alpha(-lambda t^alpha) is evaluated.
///
/// The alternating Maclaurin series is used while z = lambda t^alpha stays
/// below `series_arg_threshold` and the estimated cancellation error stays
/// below `abs_tol`; otherwise the branch-cut integral takes over.
struct MLEvalConfig {
  int series_cutoff_terms = 200;
  double series_arg_threshold = 5.0;
  double abs_tol = 1e-12;

  void validate() const;
};

/// Gamma function. Uses the reflection formula for x < 0.5; throws at poles.
double gamma(double x);

/// Digamma (psi) for x > 0.
double digamma(double x);

/// e_alpha(lambda, t) for alpha in (0, 1], lambda >= 0, t >= 0. e_alpha(0, t) = 1.
double ml(double alpha, double lambda, double t, const MLEvalConfig& cfg = {});

/// Maclaurin series alone; empty when it cannot reach cfg.abs_tol.
std::optional<double> ml_series(double alpha, double lambda, double t, const MLEvalConfig& cfg = {});

/// Real branch-cut representation of the inverse Laplace transform of
/// s^{alpha-1} / (s^alpha + lambda), reduced to a bounded integral on [0, 1]
/// and integrated with adaptive Gauss-Kronrod. Valid on the whole domain.
double ml_branch_cut(double alpha, double lambda, double t);

/// Inverse Laplace transform along a fixed cotangent (Talbot-type) contour.
/// Absolute accuracy about 1e-13; independent of ml_branch_cut.
double ml_contour(double alpha, double lambda, double t);

/// d e_alpha(lambda, t) / d alpha at fixed lambda, t.
///
/// Term-wise differentiated series in the series regime, contour inversion of
/// d/dalpha [s^{alpha-1} / (s^alpha + lambda)] elsewhere.
double dml_dalpha(double alpha, double lambda, double t, const MLEvalConfig& cfg = {});

std::optional<double> dml_dalpha_series(double alpha, double lambda, double t,
                                        const MLEvalConfig& cfg = {});
double dml_dalpha_contour(double alpha, double lambda, double t);

/// Sign pattern of the large-argument expansion
/// e_alpha(lambda, tau) ~ sum_j s_j tau^{-j alpha} / (lambda^j Gamma(1 - j alpha)).
///
/// `alternating` (s_j = (-1)^{j+1}) is the true expansion of E_alpha(-z).
/// `all_positive` (s_j = 1) drops the alternation; it agrees with the true
/// expansion only in the leading term and is kept for comparison reports.
enum class AsymptoticSign { alternating, all_positive };

/// Coefficient of tau^{-j alpha} in the large-tau expansion (j >= 1).
double ml_asymptotic_coefficient(double alpha, double lambda, int j,
                                 AsymptoticSign sign = AsymptoticSign::alternating);

/// Truncated large-tau expansion with `n_terms` terms. Requires
/// n_terms * alpha < 1 (Gamma pole otherwise), alpha in (0, 1), lambda > 0.
double ml_asymptotic(double alpha, double lambda, double tau, int n_terms,
                     AsymptoticSign sign = AsymptoticSign::alternating);

/// Largest n >= 1 with n * alpha < 1.
int asymptotic_order(double alpha);

}  // namespace fdmv
