#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fdmv/common.hpp"
#include "fdmv/diagnostics.hpp"
#include "fdmv/encoder.hpp"
#include "fdmv/graph.hpp"
#include "fdmv/io.hpp"

namespace fdmv {

enum class GradMode { analytic, finite_difference };

GradMode parse_grad_mode(const std::string& name);
std::string to_string(GradMode mode);

struct TrainConfig {
  int k_init = 5;
  double lr_w = 1e-2;
  double lr_alpha = 1e-2;
  int epochs_n = 50;
  double clip_eps = 1e-4;
  double merge_delta = 1e-4;
  double eta = 0.1;
  std::uint64_t seed = 0;
  GradMode grad_mode = GradMode::analytic;
  int max_rounds = 20;
  double horizon_T = 20.0;
  Index d_hid = 0;  // 0: same as the input width
  Activation activation = Activation::relu;
  std::vector<double> initial_alphas;  // empty: k_init draws from U(0.01, 1]
  int threads = 1;

  void validate() const;
};

/// Loss and parameter gradients for every encoder of a bank.
struct BankGradient {
  double loss = 0.0;
  std::vector<Matrix> dW;
  std::vector<double> dalpha;
};

/// Gradient of total_loss over all {W_k, alpha_k}.
///
/// analytic: chain rule through the spectral closed form, with
/// d e_alpha / d alpha from dml_dalpha. finite_difference: central
/// differences (step fd_step) on every coordinate; one-sided second-order
/// differences for alpha within fd_step of 1.
BankGradient grad_loss(const SpectralBasis& basis, const Matrix& x, const EncoderBank& bank, double eta,
                       GradMode mode, Activation act = Activation::relu, int threads = 1);

/// Central-difference estimates of single coordinates.
double fd_alpha(const SpectralBasis& basis, const Matrix& x, const EncoderBank& bank, double eta, Activation act,
                std::size_t k, double step = 1e-5);
double fd_weight(const SpectralBasis& basis, const Matrix& x, const EncoderBank& bank, double eta, Activation act,
                 std::size_t k, Index row, Index col, double step = 1e-5);

double clip_alpha(double alpha, double eps);

/// Single-linkage clusters of log(alpha) with threshold delta, ascending.
std::vector<std::vector<double>> alpha_clusters(const std::vector<double>& alphas, double delta);

/// One uniformly chosen survivor per cluster, ascending.
std::vector<double> merge_alphas(const std::vector<double>& alphas, double delta, std::mt19937_64& rng);

struct EpochRecord {
  int round = 0;
  int epoch = 0;
  double loss = 0.0;
  std::vector<double> alphas;  // after the update and clip
};

struct MergeEvent {
  int round = 0;
  std::vector<double> merged;
  double survivor = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::vector<MergeEvent> merge_events;
  std::vector<int> k_per_round;
  std::vector<double> final_alphas;
  bool single_view = false;  // every alpha merged into one cluster

  std::string to_json() const;
};

struct AvlaResult {
  EncoderBank bank;  // one encoder when report.single_view
  TrainReport report;
};

/// Trains N epochs of gradient descent per round, merges log-close alphas,
/// reinitializes every W and repeats until no merge occurs.
AvlaResult avla(const SpectralBasis& basis, const Matrix& x, const TrainConfig& cfg);

/// Initial alphas: cfg.initial_alphas, or k_init uniform draws from (0.01, 1].
std::vector<double> initial_alphas(const TrainConfig& cfg);

struct BetaSearch {
  std::vector<double> beta;
  double val_acc = 0.0;
  std::size_t candidates = 0;
};

/// Simplex weights maximizing validation probe accuracy of sum_k beta_k Y_k.
/// K = 2: all 101 grid points of step 0.01. K > 2: coordinate ascent on the
/// same grid from the uniform point. Ties go to the point closest to uniform.
BetaSearch tune_beta(const std::vector<ViewEmbedding>& views, const std::vector<int>& labels, const Splits& splits,
                     const ProbeConfig& probe = {});

struct PipelineResult {
  AvlaResult trained;
  std::vector<ViewEmbedding> views;
  BetaSearch beta;
  Matrix embedding;
  ProbeResult probe;
};

/// Trained bank plus what is needed to rebuild the combined embedding.
struct SavedBank {
  EncoderBank bank;
  Activation activation = Activation::relu;
  std::vector<double> beta;
};

/// Schema "fdmv.bank/1": alphas, horizon_T, activation, beta and one
/// row-major W per encoder.
std::string bank_to_json(const SavedBank& saved);
SavedBank bank_from_json(const std::string& text);

/// avla, then beta tuning and a probe of the combined embedding.
PipelineResult run_pipeline(const Dataset& data, const TrainConfig& cfg, const ProbeConfig& probe = {});

}  // namespace fdmv
