#include "fdmv/fde.hpp"

#include <cmath>
#include <string>

namespace fdmv {

namespace {

void check_alpha(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha <= 1.0, "fractional order must lie in (0, 1]");
}

void check_finite_state(const Matrix& y, std::size_t step) {
  if (!y.allFinite())
    throw NumericalError("fractional solver blew up: non-finite state at step " + std::to_string(step));
}

}  // namespace

void DiffusionSpec::validate() const {
  check_alpha(alpha);
  require(std::isfinite(horizon_T) && horizon_T > 0.0, "diffusion horizon T must be > 0");
  require(std::isfinite(step_h) && step_h > 0.0, "step h must be > 0");
  require(skip_tau.has_value() == skip_m.has_value(), "skip_tau and skip_m must be given together");
  if (skip_tau) {
    require(*skip_tau > 0.0, "skip_tau must be > 0");
    require(*skip_m >= 1, "skip_m must be >= 1");
    require(std::abs(*skip_m * *skip_tau - horizon_T) <= 1e-9, "skip_m * skip_tau must equal T");
  }
}

Vector diffusion_multipliers(const Vector& eigenvalues, double alpha, double T, const MLEvalConfig& cfg) {
  check_alpha(alpha);
  require(std::isfinite(T) && T >= 0.0, "diffusion time must be >= 0");
  Vector e(eigenvalues.size());
  for (Index i = 0; i < e.size(); ++i) e(i) = ml(alpha, eigenvalues(i), T, cfg);
  return e;
}

Matrix solve_linear_spectral(const SpectralBasis& basis, const Matrix& y0, double alpha, double T,
                             const MLEvalConfig& cfg) {
  require(y0.rows() == basis.size(), "initial state rows do not match the spectral basis");
  if (T == 0.0) {
    check_alpha(alpha);
    return y0;
  }
  const Vector e = diffusion_multipliers(basis.eigenvalues, alpha, T, cfg);
  return basis.eigenvectors * (e.asDiagonal() * (basis.eigenvectors.transpose() * y0));
}

Trajectory solve_caputo_pc(const RightHandSide& rhs, const Matrix& y0, double alpha, double T, double h,
                           int record_every) {
  check_alpha(alpha);
  require(std::isfinite(T) && T > 0.0, "horizon must be > 0");
  require(std::isfinite(h) && h > 0.0, "step must be > 0");
  require(record_every >= 1, "record_every must be >= 1");
  const double ratio = T / h;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  require(steps >= 1 && std::abs(ratio - static_cast<double>(steps)) <= 1e-9 * std::max(1.0, ratio),
          "step h must divide the horizon T");

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(y0);
  auto time_at = [&](std::size_t n) { return n == steps ? T : static_cast<double>(n) * h; };
  auto record = [&](std::size_t n, const Matrix& y) {
    if (n % static_cast<std::size_t>(record_every) == 0 || n == steps) {
      traj.times.push_back(time_at(n));
      traj.states.push_back(y);
    }
  };

  if (alpha == 1.0) {
    Matrix y = y0;
    Matrix f = rhs(0.0, y);
    for (std::size_t n = 0; n < steps; ++n) {
      const Matrix predictor = y + h * f;
      const Matrix f_pred = rhs(time_at(n + 1), predictor);
      y += 0.5 * h * (f + f_pred);
      check_finite_state(y, n + 1);
      f = rhs(time_at(n + 1), y);
      record(n + 1, y);
    }
    return traj;
  }

  // pow_a[k] = k^alpha, pow_a1[k] = k^{alpha+1}
  std::vector<double> pow_a(steps + 2), pow_a1(steps + 2);
  for (std::size_t k = 0; k < steps + 2; ++k) {
    pow_a[k] = std::pow(static_cast<double>(k), alpha);
    pow_a1[k] = std::pow(static_cast<double>(k), alpha + 1.0);
  }
  const double pred_scale = std::pow(h, alpha) / gamma(alpha + 1.0);
  const double corr_scale = std::pow(h, alpha) / gamma(alpha + 2.0);

  std::vector<Matrix> history;  // F(t_j, y_j)
  history.reserve(steps + 1);
  history.push_back(rhs(0.0, y0));
  Matrix pred_sum(y0.rows(), y0.cols());
  Matrix corr_sum(y0.rows(), y0.cols());
  for (std::size_t n = 0; n < steps; ++n) {
    pred_sum.setZero();
    corr_sum.setZero();
    const double nd = static_cast<double>(n);
    corr_sum.noalias() += (pow_a1[n] - (nd - alpha) * pow_a[n + 1]) * history[0];
    for (std::size_t j = 0; j <= n; ++j) {
      const std::size_t k = n - j;
      pred_sum.noalias() += (pow_a[k + 1] - pow_a[k]) * history[j];
      if (j >= 1) corr_sum.noalias() += (pow_a1[k + 2] + pow_a1[k] - 2.0 * pow_a1[k + 1]) * history[j];
    }
    const Matrix predictor = y0 + pred_scale * pred_sum;
    check_finite_state(predictor, n + 1);
    const Matrix y = y0 + corr_scale * (rhs(time_at(n + 1), predictor) + corr_sum);
    check_finite_state(y, n + 1);
    history.push_back(rhs(time_at(n + 1), y));
    record(n + 1, y);
  }
  return traj;
}

Vector skip_multipliers(const Vector& eigenvalues, double alpha, double tau, int m, const MLEvalConfig& cfg) {
  require(m >= 1, "skip count m must be >= 1");
  require(std::isfinite(tau) && tau > 0.0, "skip interval tau must be > 0");
  const Vector e = diffusion_multipliers(eigenvalues, alpha, tau, cfg);
  Vector total = Vector::Ones(e.size());
  Vector power = Vector::Ones(e.size());
  for (int k = 1; k <= m; ++k) {
    power = power.cwiseProduct(e);
    total += power;
  }
  return total;
}

Matrix solve_with_skips(const SpectralBasis& basis, const Matrix& y0, double alpha, double tau, int m,
                        const MLEvalConfig& cfg) {
  require(y0.rows() == basis.size(), "initial state rows do not match the spectral basis");
  const Vector mult = skip_multipliers(basis.eigenvalues, alpha, tau, m, cfg);
  return basis.eigenvectors * (mult.asDiagonal() * (basis.eigenvectors.transpose() * y0));
}

Matrix solve_spectral(const SpectralBasis& basis, const Matrix& y0, const DiffusionSpec& spec,
                      const MLEvalConfig& cfg) {
  spec.validate();
  if (spec.skip_tau) return solve_with_skips(basis, y0, spec.alpha, *spec.skip_tau, *spec.skip_m, cfg);
  return solve_linear_spectral(basis, y0, spec.alpha, spec.horizon_T, cfg);
}

}  // namespace fdmv
