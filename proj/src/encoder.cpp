#include "fdmv/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "fdmv/fde.hpp"

namespace fdmv {

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw ValidationError("unknown activation '" + name + "' (relu|identity)");
}

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

void EncoderParams::validate() const {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha <= 1.0, "encoder alpha must lie in (0, 1]");
  require(std::isfinite(horizon_T) && horizon_T >= 0.0, "encoder horizon T must be >= 0");
  require(W.size() > 0 && W.allFinite(), "encoder weights must be nonempty and finite");
}

std::vector<double> EncoderBank::alphas() const {
  std::vector<double> out;
  for (const auto& e : encoders) out.push_back(e.alpha);
  return out;
}

void EncoderBank::validate() const {
  require(encoders.size() >= 2, "encoder bank needs K >= 2 encoders");
  for (std::size_t k = 0; k < encoders.size(); ++k) {
    encoders[k].validate();
    require(encoders[k].W.rows() == encoders[0].W.rows() && encoders[k].W.cols() == encoders[0].W.cols(),
            "encoder weight shapes differ within the bank");
    require(encoders[k].horizon_T == encoders[0].horizon_T, "encoders in a bank share one horizon T");
    if (k > 0) require(encoders[k - 1].alpha <= encoders[k].alpha, "bank alphas must be ascending");
  }
}

Index hidden_dim(Index d_in, Index requested) { return std::max(d_in, requested); }

Matrix init_weights(Index d_in, Index d_hid, std::mt19937_64& rng) {
  require(d_in > 0 && d_hid > 0, "weight dimensions must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix w(d_in, d_hid);
  for (Index j = 0; j < d_hid; ++j)
    for (Index i = 0; i < d_in; ++i) w(i, j) = dist(rng);
  return w;
}

EncoderBank init_bank(Index d_in, Index d_hid, std::span<const double> alphas, double horizon_T,
                      std::uint64_t seed, std::uint64_t round) {
  std::vector<double> sorted(alphas.begin(), alphas.end());
  std::sort(sorted.begin(), sorted.end());
  EncoderBank bank;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    auto rng = derive_stream(seed, "init", (round << 32) + k);
    bank.encoders.push_back({init_weights(d_in, d_hid, rng), sorted[k], horizon_T});
  }
  bank.validate();
  return bank;
}

ViewEmbedding encoder_forward_spectral(const SpectralBasis& basis, const Matrix& x_hat, const EncoderParams& p,
                                       Activation act, EncoderCache* cache, const MLEvalConfig& cfg) {
  p.validate();
  require(x_hat.rows() == basis.size(), "feature rows do not match the graph");
  require(x_hat.cols() == p.W.rows(), "feature width does not match encoder input dimension");
  EncoderCache local;
  EncoderCache& c = cache ? *cache : local;
  c.h_hat = x_hat * p.W;
  c.mult = diffusion_multipliers(basis.eigenvalues, p.alpha, p.horizon_T, cfg);
  c.y_pre = basis.eigenvectors * (c.mult.asDiagonal() * c.h_hat);
  ViewEmbedding out{act == Activation::relu ? Matrix(c.y_pre.cwiseMax(0.0)) : c.y_pre, p.alpha};
  if (!out.Y.allFinite()) throw NumericalError("encoder produced non-finite output");
  return out;
}

ViewEmbedding encoder_forward(const SpectralBasis& basis, const Matrix& x, const EncoderParams& p, Activation act,
                              const MLEvalConfig& cfg) {
  require(x.rows() == basis.size(), "feature rows do not match the graph");
  return encoder_forward_spectral(basis, gft(basis, x), p, act, nullptr, cfg);
}

std::vector<ViewEmbedding> bank_forward(const SpectralBasis& basis, const Matrix& x, const EncoderBank& bank,
                                        Activation act, int threads, const MLEvalConfig& cfg) {
  bank.validate();
  require(x.rows() == basis.size(), "feature rows do not match the graph");
  const Matrix x_hat = gft(basis, x);
  std::vector<ViewEmbedding> views(bank.size());
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, bank.size());
  if (workers == 1) {
    for (std::size_t k = 0; k < bank.size(); ++k)
      views[k] = encoder_forward_spectral(basis, x_hat, bank.encoders[k], act, nullptr, cfg);
    return views;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < bank.size(); k += workers)
            views[k] = encoder_forward_spectral(basis, x_hat, bank.encoders[k], act, nullptr, cfg);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return views;
}

void check_simplex(std::span<const double> beta) {
  double total = 0.0;
  for (double b : beta) {
    require(std::isfinite(b) && b >= 0.0, "view weights must be nonnegative");
    total += b;
  }
  require(std::abs(total - 1.0) <= 1e-9, "view weights must sum to 1");
}

Matrix combine_views(std::span<const ViewEmbedding> views, std::span<const double> beta) {
  require(!views.empty(), "no views to combine");
  require(views.size() == beta.size(), "one weight per view is required");
  check_simplex(beta);
  Matrix y = Matrix::Zero(views[0].Y.rows(), views[0].Y.cols());
  for (std::size_t k = 0; k < views.size(); ++k) {
    require(views[k].Y.rows() == y.rows() && views[k].Y.cols() == y.cols(), "views differ in shape");
    if (beta[k] != 0.0) y += beta[k] * views[k].Y;
  }
  return y;
}

}  // namespace fdmv
