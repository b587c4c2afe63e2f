#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fdmv/common.hpp"
#include "fdmv/graph.hpp"
#include "fdmv/special.hpp"

namespace fdmv {

struct DiffusionSpec {
  double alpha = 1.0;
  double horizon_T = 1.0;
  double step_h = 1e-3;
  std::optional<double> skip_tau;
  std::optional<int> skip_m;

  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Matrix> states;
};

/// Right-hand side F(t, Y) of D^alpha_t Y = F(t, Y).
using RightHandSide = std::function<Matrix(double, const Matrix&)>;

/// e_alpha(lambda_i, T) for every eigenvalue.
Vector diffusion_multipliers(const Vector& eigenvalues, double alpha, double T, const MLEvalConfig& cfg = {});

/// U diag(e_alpha(lambda_i, T)) U^T Y0: the exact solution of D^alpha Y = -L Y.
Matrix solve_linear_spectral(const SpectralBasis& basis, const Matrix& y0, double alpha, double T,
                             const MLEvalConfig& cfg = {});

/// Caputo problem D^alpha Y = F(t, Y), Y(0) = Y0, by the fractional
/// Adams-Bashforth-Moulton predictor-corrector with full memory. At alpha = 1
/// it is the classical Euler predictor / trapezoidal corrector.
/// `record_every` thins the stored trajectory (the final state is always kept).
Trajectory solve_caputo_pc(const RightHandSide& rhs, const Matrix& y0, double alpha, double T, double h,
                           int record_every = 1);

/// 1 + e + e^2 + ... + e^m with e = e_alpha(lambda_i, tau).
Vector skip_multipliers(const Vector& eigenvalues, double alpha, double tau, int m, const MLEvalConfig& cfg = {});

/// m diffusion blocks of length tau, each followed by a skip connection.
Matrix solve_with_skips(const SpectralBasis& basis, const Matrix& y0, double alpha, double tau, int m,
                        const MLEvalConfig& cfg = {});

/// Dispatches on `spec`: skip composition when skips are set, plain diffusion otherwise.
Matrix solve_spectral(const SpectralBasis& basis, const Matrix& y0, const DiffusionSpec& spec,
                      const MLEvalConfig& cfg = {});

}  // namespace fdmv
