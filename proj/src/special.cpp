#include "fdmv/special.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>
#include <algorithm>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include "fdmv/common.hpp"

namespace fdmv {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_ml_domain(double alpha, double lambda, double t) {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha <= 1.0,
          "Mittag-Leffler: alpha must lie in (0, 1], got " + std::to_string(alpha));
  require(std::isfinite(lambda) && lambda >= 0.0, "Mittag-Leffler: lambda must be finite and >= 0");
  require(std::isfinite(t) && t >= 0.0, "Mittag-Leffler: t must be finite and >= 0");
}

// Neumaier compensated sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double s = sum + x;
    if (std::abs(sum) >= std::abs(x))
      carry += (sum - s) + x;
    else
      carry += (x - s) + sum;
    sum = s;
  }
  double value() const { return sum + carry; }
};

// Shared driver for the series of e_alpha and of its alpha-derivative. Term n is
// (-z)^n / Gamma(alpha n + 1), optionally multiplied by weight(n).
template <typename Weight>
std::optional<double> alternating_series(double alpha, double z, const MLEvalConfig& cfg, Weight weight) {
  const double log_z = std::log(z);
  CompensatedSum acc;
  acc.add(weight(0) * 1.0);
  double error_estimate = 0.0;
  double previous = 1.0;
  for (int n = 1; n <= cfg.series_cutoff_terms; ++n) {
    const double log_gamma = std::lgamma(alpha * n + 1.0);
    const double exponent = n * log_z - log_gamma;
    const double magnitude = std::exp(exponent);
    const double w = weight(n);
    const double term = ((n % 2) ? -magnitude : magnitude) * w;
    acc.add(term);
    // exp/lgamma carry a relative error proportional to the exponent size.
    error_estimate += std::abs(term) * kEps * (4.0 + std::abs(n * log_z) + std::abs(log_gamma));
    const bool decreasing = magnitude <= previous;
    previous = magnitude;
    if (decreasing && std::abs(term) <= kEps * 1e-2 * std::max(std::abs(acc.value()), cfg.abs_tol)) {
      if (error_estimate > cfg.abs_tol) return std::nullopt;
      return acc.value();
    }
    if (magnitude == 0.0 && decreasing) return error_estimate > cfg.abs_tol ? std::nullopt : std::optional(acc.value());
  }
  return std::nullopt;
}

// Fixed cotangent contour s(theta) = N (a theta cot(b theta) - c + i d theta),
// trapezoid rule over theta in (-pi, pi), conjugate symmetry folded in.
template <typename Transform>
double invert_laplace(Transform transform, double t) {
  constexpr int kNodes = 24;
  constexpr double a = 0.5017, b = 0.6407, c = 0.6122, d = 0.2645;
  double total = 0.0;
  for (int k = kNodes / 2 + 1; k <= kNodes; ++k) {
    const double theta = -kPi + (k - 0.5) * 2.0 * kPi / kNodes;
    const double bt = b * theta;
    const double cot = std::cos(bt) / std::sin(bt);
    const std::complex<double> s(kNodes * (a * theta * cot - c), kNodes * d * theta);
    const std::complex<double> ds(kNodes * (a * cot - a * bt / (std::sin(bt) * std::sin(bt))), kNodes * d);
    total += std::imag(std::exp(s) * transform(s / t) / t * ds);
  }
  return 2.0 / kNodes * total;
}

}  // namespace

void MLEvalConfig::validate() const {
  require(series_cutoff_terms >= 10, "MLEvalConfig: series_cutoff_terms must be >= 10");
  require(series_arg_threshold > 0.0, "MLEvalConfig: series_arg_threshold must be > 0");
  require(abs_tol > 0.0, "MLEvalConfig: abs_tol must be > 0");
}

double gamma(double x) {
  require(std::isfinite(x), "gamma: argument must be finite");
  if (x <= 0.0 && x == std::floor(x))
    throw ValidationError("gamma: pole at nonpositive integer " + std::to_string(x));
  if (x < 0.5) return kPi / (std::sin(kPi * x) * std::tgamma(1.0 - x));
  return std::tgamma(x);
}

double digamma(double x) {
  require(std::isfinite(x) && x > 0.0, "digamma: argument must be > 0");
  return boost::math::digamma(x);
}

std::optional<double> ml_series(double alpha, double lambda, double t, const MLEvalConfig& cfg) {
  check_ml_domain(alpha, lambda, t);
  cfg.validate();
  if (lambda == 0.0 || t == 0.0) return 1.0;
  const double z = lambda * std::pow(t, alpha);
  return alternating_series(alpha, z, cfg, [](int) { return 1.0; });
}

namespace {

// Integral over v in [0, 1/2] of exp(-(z r)^{1/alpha}), where log_r(v) is
// monotone in v. The integrand falls from ~1 to ~0 across bands that become
// very narrow for large z and near alpha = 1, so the half is split where the
// exponent (z r)^{1/alpha} passes a ladder of levels.
template <typename LogR>
double branch_cut_half(LogR log_r, double log_z, double alpha) {
  auto integrand = [&](double v) { return std::exp(-std::exp((log_z + log_r(v)) / alpha)); };
  auto above = [&](double v, double level) { return log_z + log_r(v) > alpha * std::log(level); };

  std::vector<double> cuts{0.0, 0.5};
  for (double level : {40.0, 20.0, 10.0, 5.0, 2.0, 1.0, 0.5, 0.2, 0.05, 0.01}) {
    double lo = 0.0, hi = 0.5;
    const bool at_lo = above(1e-300, level);
    if (above(hi, level) == at_lo) continue;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (above(mid, level) == at_lo ? lo : hi) = mid;
    }
    cuts.push_back(0.5 * (lo + hi));
  }
  std::sort(cuts.begin(), cuts.end());

  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  // The Gauss-Kronrod error estimate bottoms out near 1e-11 relative (rounding
  // in the integrand is amplified by 1/alpha); the integrals themselves are
  // typically accurate well beyond the requested tolerance.
  constexpr double kQuadTol = 1e-10;
  // Pieces where the integrand stays below exp(-40) are dropped.
  constexpr double kNegligible = 1e-17;
  // The piece at s = 0 of the upper half behaves like 1 - c s^{1/alpha};
  // double-exponential quadrature absorbs that endpoint singularity.
  thread_local boost::math::quadrature::tanh_sinh<double> endpoint;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (!(b - a > 1e-15)) continue;
    if (std::max(integrand(std::max(a, 1e-300)), integrand(b)) < kNegligible) continue;
    total += a == 0.0 ? endpoint.integrate(integrand, a, b, kQuadTol) : Quad::integrate(integrand, a, b, 12, kQuadTol);
  }
  return total;
}

}  // namespace

double ml_branch_cut(double alpha, double lambda, double t) {
  check_ml_domain(alpha, lambda, t);
  if (lambda == 0.0 || t == 0.0) return 1.0;
  const double log_z = std::log(lambda) + alpha * std::log(t);
  const double ap = alpha * kPi;

  // e = int_0^1 exp(-(z r(u))^{1/alpha}) du, r(u) = sin(ap (1-u)) / sin(ap u).
  // The upper half is integrated in s = 1 - u so that s stays exact near u = 1.
  auto lower = [ap](double u) { return std::log(std::sin(ap * (1.0 - u))) - std::log(std::sin(ap * u)); };
  auto upper = [ap](double s) { return std::log(std::sin(ap * s)) - std::log(std::sin(ap * (1.0 - s))); };
  return branch_cut_half(lower, log_z, alpha) + branch_cut_half(upper, log_z, alpha);
}

double ml_contour(double alpha, double lambda, double t) {
  check_ml_domain(alpha, lambda, t);
  if (lambda == 0.0 || t == 0.0) return 1.0;
  return invert_laplace(
      [alpha, lambda](std::complex<double> s) {
        return std::pow(s, alpha - 1.0) / (std::pow(s, alpha) + lambda);
      },
      t);
}

double ml(double alpha, double lambda, double t, const MLEvalConfig& cfg) {
  check_ml_domain(alpha, lambda, t);
  cfg.validate();
  if (lambda == 0.0 || t == 0.0) return 1.0;
  const double z = lambda * std::pow(t, alpha);
  if (alpha == 1.0) return std::exp(-z);
  if (z <= cfg.series_arg_threshold) {
    if (auto v = alternating_series(alpha, z, cfg, [](int) { return 1.0; })) return *v;
  }
  return ml_branch_cut(alpha, lambda, t);
}

std::optional<double> dml_dalpha_series(double alpha, double lambda, double t, const MLEvalConfig& cfg) {
  check_ml_domain(alpha, lambda, t);
  cfg.validate();
  if (lambda == 0.0 || t == 0.0) return 0.0;
  const double z = lambda * std::pow(t, alpha);
  const double log_t = std::log(t);
  return alternating_series(alpha, z, cfg,
                            [=](int n) { return n == 0 ? 0.0 : n * (log_t - digamma(alpha * n + 1.0)); });
}

double dml_dalpha_contour(double alpha, double lambda, double t) {
  check_ml_domain(alpha, lambda, t);
  if (lambda == 0.0 || t == 0.0) return 0.0;
  return invert_laplace(
      [alpha, lambda](std::complex<double> s) {
        const std::complex<double> sa = std::pow(s, alpha);
        const std::complex<double> denom = sa + lambda;
        return lambda * std::pow(s, alpha - 1.0) * std::log(s) / (denom * denom);
      },
      t);
}

double dml_dalpha(double alpha, double lambda, double t, const MLEvalConfig& cfg) {
  check_ml_domain(alpha, lambda, t);
  cfg.validate();
  if (lambda == 0.0 || t == 0.0) return 0.0;
  const double z = lambda * std::pow(t, alpha);
  if (z <= cfg.series_arg_threshold) {
    if (auto v = dml_dalpha_series(alpha, lambda, t, cfg)) return *v;
  }
  return dml_dalpha_contour(alpha, lambda, t);
}

int asymptotic_order(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, "asymptotic_order: alpha must lie in (0, 1)");
  int n = 1;
  while ((n + 1) * alpha < 1.0 - 1e-12) ++n;
  return n;
}

double ml_asymptotic_coefficient(double alpha, double lambda, int j, AsymptoticSign sign) {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, "ml_asymptotic: alpha must lie in (0, 1)");
  require(std::isfinite(lambda) && lambda > 0.0, "ml_asymptotic: lambda must be > 0");
  require(j >= 1, "ml_asymptotic: term index must be >= 1");
  const double s = (sign == AsymptoticSign::alternating && j % 2 == 0) ? -1.0 : 1.0;
  return s / (std::pow(lambda, j) * gamma(1.0 - j * alpha));
}

double ml_asymptotic(double alpha, double lambda, double tau, int n_terms, AsymptoticSign sign) {
  require(n_terms >= 1, "ml_asymptotic: n_terms must be >= 1");
  require(std::isfinite(tau) && tau > 0.0, "ml_asymptotic: tau must be > 0");
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, "ml_asymptotic: alpha must lie in (0, 1)");
  if (n_terms * alpha >= 1.0)
    throw ValidationError("ml_asymptotic: n_terms * alpha = " + std::to_string(n_terms * alpha) +
                          " >= 1 hits a Gamma pole");
  double total = 0.0;
  for (int j = 1; j <= n_terms; ++j)
    total += ml_asymptotic_coefficient(alpha, lambda, j, sign) * std::pow(tau, -j * alpha);
  return total;
}

}  // namespace fdmv
