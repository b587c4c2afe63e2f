#pragma once

#include <span>
#include <string>
#include <vector>

#include "fdmv/common.hpp"
#include "fdmv/encoder.hpp"

namespace fdmv {

struct LossConfig {
  double eta = 1.0;          // dominant-direction penalty weight
  double bt_lambda = 5e-3;   // Barlow Twins off-diagonal weight
  double vicreg_inv = 25.0;  // eta_1
  double vicreg_var = 25.0;  // eta_2
  double vicreg_cov = 1.0;   // eta_3
  double vicreg_eps = 1.0;   // variance hinge target
  double cca_lambda = 1e-3;

  void validate() const;
};

enum class PairLoss { cosmean, regularized_cosmean, euclidean, barlow_twins, vicreg, cca };

PairLoss parse_pair_loss(const std::string& name);
std::string to_string(PairLoss kind);

/// 1 - mean row-wise cosine similarity. A zero row contributes similarity 0.
double cosmean(const Matrix& yl, const Matrix& yg);

/// Adds scale * dcosmean/dYl and scale * dcosmean/dYg into gl and gg.
void cosmean_backward(const Matrix& yl, const Matrix& yg, double scale, Matrix& gl, Matrix& gg);

/// Top principal direction of the column-centered Y, with the largest-magnitude
/// entry positive. Power (two-vector subspace) iteration, tolerance 1e-10 on
/// the eigen-residual, at most 1000 iterations.
struct DominantDirection {
  Vector direction;
  double top = 0.0;     // largest eigenvalue of Yc^T Yc
  double second = 0.0;  // second largest (0 when F = 1)
  int iterations = 0;
};

DominantDirection dominant_direction_info(const Matrix& y);
Vector dominant_direction(const Matrix& y);

/// Gradient of <c(Y), v> with respect to Y, where c(Y) is the dominant direction.
Matrix dominant_direction_vjp(const Matrix& y, const DominantDirection& dd, const Vector& v);

/// cosmean + eta |<c_k, c_k'>|.
double regularized_cosmean(const Matrix& yk, const Matrix& yk2, double eta);

/// sum_k L_R(Y_k, Y_{k+1 mod K}); with K = 2 both ordered pairs count.
double total_loss(std::span<const ViewEmbedding> views, double eta);

/// Loss value and dL/dY_k for every view.
double total_loss_backward(std::span<const ViewEmbedding> views, double eta, std::vector<Matrix>& grads);

double euclidean_loss(const Matrix& yl, const Matrix& yg);

/// Columns standardized to zero mean, unit variance; C = Yl^T Yg / N;
/// sum_i (1 - C_ii)^2 + lambda sum_{i != j} C_ij^2.
double barlow_twins(const Matrix& yl, const Matrix& yg, double lambda);

/// eta1 inv + eta2 var + eta3 cov with the variance hinge on sqrt(Var) and
/// population (1/N) moments.
double vicreg(const Matrix& yl, const Matrix& yg, double eta1, double eta2, double eta3, double eps);

/// Columns standardized and scaled by 1/sqrt(N);
/// ||Yl - Yg||_F^2 + lambda (||Yl^T Yl - I||_F^2 + ||Yg^T Yg - I||_F^2).
double cca_loss(const Matrix& yl, const Matrix& yg, double lambda);

double pair_loss(PairLoss kind, const Matrix& yl, const Matrix& yg, const LossConfig& cfg);

}  // namespace fdmv
