#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fdmv/common.hpp"
#include "fdmv/graph.hpp"
#include "fdmv/special.hpp"

namespace fdmv {

enum class Activation { relu, identity };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// One view encoder: Y = sigma(U diag(e_alpha(lambda, T)) U^T X W).
/// Node features are rows, so projection is the right product X W.
struct EncoderParams {
  Matrix W;  // d_in x d_hid
  double alpha = 1.0;
  double horizon_T = 1.0;

  void validate() const;
};

struct ViewEmbedding {
  Matrix Y;
  double source_alpha = 1.0;
};

/// Encoders ordered by ascending alpha; all share one horizon T.
struct EncoderBank {
  std::vector<EncoderParams> encoders;

  std::size_t size() const { return encoders.size(); }
  std::vector<double> alphas() const;
  void validate() const;
};

/// d_hid = max(d_in, requested).
Index hidden_dim(Index d_in, Index requested);

/// W entries uniform in [-1/sqrt(d_in), 1/sqrt(d_in)].
Matrix init_weights(Index d_in, Index d_hid, std::mt19937_64& rng);

/// Sorts alphas ascending; encoder k draws W from the stream ("init", k) of `seed`.
/// `round` separates the streams of successive reinitializations.
EncoderBank init_bank(Index d_in, Index d_hid, std::span<const double> alphas, double horizon_T,
                      std::uint64_t seed, std::uint64_t round = 0);

/// Intermediate quantities of one forward pass, kept for backpropagation.
struct EncoderCache {
  Matrix h_hat;      // (U^T X) W, spectral coefficients of the projected input
  Vector mult;       // e_alpha(lambda_i, T)
  Matrix y_pre;      // U diag(mult) h_hat
};

/// Forward pass from precomputed spectral features x_hat = U^T X.
ViewEmbedding encoder_forward_spectral(const SpectralBasis& basis, const Matrix& x_hat, const EncoderParams& p,
                                       Activation act, EncoderCache* cache = nullptr, const MLEvalConfig& cfg = {});

ViewEmbedding encoder_forward(const SpectralBasis& basis, const Matrix& x, const EncoderParams& p,
                              Activation act = Activation::relu, const MLEvalConfig& cfg = {});

/// Encoders run on up to `threads` threads; results do not depend on scheduling.
std::vector<ViewEmbedding> bank_forward(const SpectralBasis& basis, const Matrix& x, const EncoderBank& bank,
                                        Activation act = Activation::relu, int threads = 1,
                                        const MLEvalConfig& cfg = {});

/// Y = sum_k beta_k Y_k with beta on the probability simplex.
Matrix combine_views(std::span<const ViewEmbedding> views, std::span<const double> beta);

void check_simplex(std::span<const double> beta);

}  // namespace fdmv
