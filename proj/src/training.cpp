#include "fdmv/training.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "json.hpp"

#include "fdmv/losses.hpp"

namespace fdmv {

GradMode parse_grad_mode(const std::string& name) {
  if (name == "analytic") return GradMode::analytic;
  if (name == "finite_difference") return GradMode::finite_difference;
  throw ValidationError("unknown gradient mode '" + name + "' (analytic|finite_difference)");
}

std::string to_string(GradMode mode) { return mode == GradMode::analytic ? "analytic" : "finite_difference"; }

void TrainConfig::validate() const {
  if (initial_alphas.empty()) {
    require(k_init >= 2, "train: k_init must be >= 2");
  } else {
    require(initial_alphas.size() >= 2, "train: at least two initial alphas are required");
    for (double a : initial_alphas)
      require(std::isfinite(a) && a > 0.0 && a <= 1.0, "train: initial alphas must lie in (0, 1]");
  }
  require(std::isfinite(lr_w) && lr_w > 0.0, "train: lr_w must be > 0");
  require(std::isfinite(lr_alpha) && lr_alpha >= 0.0, "train: lr_alpha must be >= 0");
  require(epochs_n >= 1, "train: epochs_n must be >= 1");
  require(std::isfinite(clip_eps) && clip_eps > 0.0 && clip_eps < 1.0, "train: clip_eps must lie in (0, 1)");
  require(std::isfinite(merge_delta) && merge_delta > 0.0, "train: merge_delta must be > 0");
  require(std::isfinite(eta) && eta >= 0.0, "train: eta must be >= 0");
  require(max_rounds >= 1, "train: max_rounds must be >= 1");
  require(std::isfinite(horizon_T) && horizon_T >= 0.0, "train: horizon_T must be >= 0");
  require(d_hid >= 0, "train: d_hid must be >= 0");
  require(threads >= 1, "train: threads must be >= 1");
}

namespace {

double loss_of(const SpectralBasis& basis, const Matrix& x_hat, const std::vector<EncoderParams>& encoders,
               double eta, Activation act) {
  std::vector<ViewEmbedding> views;
  for (const auto& p : encoders) views.push_back(encoder_forward_spectral(basis, x_hat, p, act));
  return total_loss(views, eta);
}

template <typename Body>
void for_each_encoder(std::size_t count, int threads, Body body) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < count; k += workers) body(k);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

BankGradient analytic_gradient(const SpectralBasis& basis, const Matrix& x, const EncoderBank& bank, double eta,
                               Activation act, int threads) {
  const Matrix x_hat = gft(basis, x);
  const std::size_t k_count = bank.size();
  std::vector<EncoderCache> caches(k_count);
  std::vector<ViewEmbedding> views(k_count);
  for_each_encoder(k_count, threads, [&](std::size_t k) {
    views[k] = encoder_forward_spectral(basis, x_hat, bank.encoders[k], act, &caches[k]);
  });

  BankGradient out;
  std::vector<Matrix> gy;
  out.loss = total_loss_backward(views, eta, gy);
  out.dW.resize(k_count);
  out.dalpha.resize(k_count);
  for_each_encoder(k_count, threads, [&](std::size_t k) {
    const auto& p = bank.encoders[k];
    const auto& c = caches[k];
    Matrix g_pre = gy[k];
    if (act == Activation::relu) g_pre = (c.y_pre.array() > 0.0).select(g_pre, 0.0);
    const Matrix g_hat = basis.eigenvectors.transpose() * g_pre;
    out.dW[k] = x_hat.transpose() * (c.mult.asDiagonal() * g_hat);
    const Vector de = g_hat.cwiseProduct(c.h_hat).rowwise().sum();
    double da = 0.0;
    for (Index i = 0; i < basis.size(); ++i)
      if (de(i) != 0.0) da += de(i) * dml_dalpha(p.alpha, basis.eigenvalues(i), p.horizon_T);
    out.dalpha[k] = da;
  });
  return out;
}

}  // namespace

double fd_alpha(const SpectralBasis& basis, const Matrix& x, const EncoderBank& bank, double eta, Activation act,
                std::size_t k, double step) {
  require(k < bank.size(), "fd_alpha: encoder index out of range");
  const Matrix x_hat = gft(basis, x);
  auto at = [&](double alpha) {
    auto encoders = bank.encoders;
    encoders[k].alpha = alpha;
    return loss_of(basis, x_hat, encoders, eta, act);
  };
  const double a = bank.encoders[k].alpha;
  if (a + step <= 1.0) return (at(a + step) - at(a - step)) / (2.0 * step);
  return (3.0 * at(a) - 4.0 * at(a - step) + at(a - 2.0 * step)) / (2.0 * step);
}

double fd_weight(const SpectralBasis& basis, const Matrix& x, const EncoderBank& bank, double eta, Activation act,
                 std::size_t k, Index row, Index col, double step) {
  require(k < bank.size(), "fd_weight: encoder index out of range");
  const Matrix x_hat = gft(basis, x);
  auto at = [&](double delta) {
    auto encoders = bank.encoders;
    encoders[k].W(row, col) += delta;
    return loss_of(basis, x_hat, encoders, eta, act);
  };
  return (at(step) - at(-step)) / (2.0 * step);
}

BankGradient grad_loss(const SpectralBasis& basis, const Matrix& x, const EncoderBank& bank, double eta,
                       GradMode mode, Activation act, int threads) {
  bank.validate();
  require(x.rows() == basis.size(), "grad_loss: feature rows do not match the graph");
  BankGradient g;
  if (mode == GradMode::analytic) {
    g = analytic_gradient(basis, x, bank, eta, act, threads);
  } else {
    g.loss = loss_of(basis, gft(basis, x), bank.encoders, eta, act);
    for (std::size_t k = 0; k < bank.size(); ++k) {
      const Matrix& w = bank.encoders[k].W;
      Matrix dw(w.rows(), w.cols());
      for (Index r = 0; r < w.rows(); ++r)
        for (Index c = 0; c < w.cols(); ++c) dw(r, c) = fd_weight(basis, x, bank, eta, act, k, r, c);
      g.dW.push_back(std::move(dw));
      g.dalpha.push_back(fd_alpha(basis, x, bank, eta, act, k));
    }
  }
  if (!std::isfinite(g.loss)) throw NumericalError("grad_loss: non-finite loss");
  for (std::size_t k = 0; k < g.dW.size(); ++k)
    if (!g.dW[k].allFinite() || !std::isfinite(g.dalpha[k]))
      throw NumericalError("grad_loss: non-finite gradient for encoder " + std::to_string(k));
  return g;
}

double clip_alpha(double alpha, double eps) {
  if (std::isnan(alpha)) throw NumericalError("clip_alpha: alpha is NaN");
  return std::min(1.0, std::max(alpha, eps));
}

std::vector<std::vector<double>> alpha_clusters(const std::vector<double>& alphas, double delta) {
  require(!alphas.empty(), "merge: no alphas given");
  require(std::isfinite(delta) && delta > 0.0, "merge: delta must be > 0");
  std::vector<double> sorted = alphas;
  for (double a : sorted) require(std::isfinite(a) && a > 0.0 && a <= 1.0, "merge: alphas must lie in (0, 1]");
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::vector<double>> clusters{{sorted[0]}};
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (std::log(sorted[i]) - std::log(sorted[i - 1]) < delta)
      clusters.back().push_back(sorted[i]);
    else
      clusters.push_back({sorted[i]});
  }
  return clusters;
}

namespace {

double pick_survivor(const std::vector<double>& cluster, std::mt19937_64& rng) {
  if (cluster.size() == 1) return cluster[0];
  std::uniform_int_distribution<std::size_t> pick(0, cluster.size() - 1);
  return cluster[pick(rng)];
}

}  // namespace

std::vector<double> merge_alphas(const std::vector<double>& alphas, double delta, std::mt19937_64& rng) {
  std::vector<double> out;
  for (const auto& cluster : alpha_clusters(alphas, delta)) out.push_back(pick_survivor(cluster, rng));
  return out;
}

std::vector<double> initial_alphas(const TrainConfig& cfg) {
  if (!cfg.initial_alphas.empty()) return cfg.initial_alphas;
  auto rng = derive_stream(cfg.seed, "alpha-init");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(cfg.k_init));
  for (double& a : out) a = 1.0 - 0.99 * unit(rng);
  return out;
}

AvlaResult avla(const SpectralBasis& basis, const Matrix& x, const TrainConfig& cfg) {
  cfg.validate();
  require(x.rows() == basis.size(), "avla: feature rows do not match the graph");
  const Index d_in = x.cols();
  const Index d_hid = hidden_dim(d_in, cfg.d_hid);

  AvlaResult result;
  TrainReport& report = result.report;
  std::vector<double> alphas = initial_alphas(cfg);
  for (int round = 0;; ++round) {
    if (round >= cfg.max_rounds)
      throw ConvergenceError("avla: no merge-free round within " + std::to_string(cfg.max_rounds) + " rounds");
    EncoderBank bank = init_bank(d_in, d_hid, alphas, cfg.horizon_T, cfg.seed, static_cast<std::uint64_t>(round));
    report.k_per_round.push_back(static_cast<int>(bank.size()));

    for (int epoch = 1; epoch <= cfg.epochs_n; ++epoch) {
      const BankGradient g = grad_loss(basis, x, bank, cfg.eta, cfg.grad_mode, cfg.activation, cfg.threads);
      for (std::size_t k = 0; k < bank.size(); ++k) {
        auto& p = bank.encoders[k];
        p.W -= cfg.lr_w * g.dW[k];
        p.alpha = clip_alpha(p.alpha - cfg.lr_alpha * g.dalpha[k], cfg.clip_eps);
      }
      std::stable_sort(bank.encoders.begin(), bank.encoders.end(),
                       [](const EncoderParams& a, const EncoderParams& b) { return a.alpha < b.alpha; });
      report.epochs.push_back({round, epoch, g.loss, bank.alphas()});
    }

    const auto clusters = alpha_clusters(bank.alphas(), cfg.merge_delta);
    if (clusters.size() == bank.size()) {
      report.final_alphas = bank.alphas();
      result.bank = std::move(bank);
      return result;
    }

    auto rng = derive_stream(cfg.seed, "merge", static_cast<std::uint64_t>(round));
    alphas.clear();
    for (const auto& cluster : clusters) {
      const double survivor = pick_survivor(cluster, rng);
      if (cluster.size() > 1) report.merge_events.push_back({round, cluster, survivor});
      alphas.push_back(survivor);
    }
    if (alphas.size() == 1) {
      // Nothing left to contrast against; keep the trained survivor.
      report.single_view = true;
      report.final_alphas = alphas;
      const auto it = std::find_if(bank.encoders.begin(), bank.encoders.end(),
                                   [&](const EncoderParams& p) { return p.alpha == alphas[0]; });
      result.bank.encoders = {*it};
      return result;
    }
  }
}

std::string TrainReport::to_json() const {
  nlohmann::ordered_json epochs_json = nlohmann::ordered_json::array();
  nlohmann::ordered_json losses = nlohmann::ordered_json::array();
  nlohmann::ordered_json traces = nlohmann::ordered_json::array();
  for (const auto& e : epochs) {
    epochs_json.push_back({{"round", e.round}, {"epoch", e.epoch}});
    losses.push_back(e.loss);
    traces.push_back(e.alphas);
  }
  nlohmann::ordered_json merges = nlohmann::ordered_json::array();
  for (const auto& m : merge_events)
    merges.push_back({{"round", m.round}, {"merged", m.merged}, {"survivor", m.survivor}});
  nlohmann::ordered_json j;
  j["schema"] = "fdmv.train_report/1";
  j["epochs"] = std::move(epochs_json);
  j["losses"] = std::move(losses);
  j["alpha_traces"] = std::move(traces);
  j["merge_events"] = std::move(merges);
  j["k_per_round"] = k_per_round;
  j["final_k"] = final_alphas.size();
  j["final_alphas"] = final_alphas;
  j["single_view"] = single_view;
  return j.dump(2) + "\n";
}

BetaSearch tune_beta(const std::vector<ViewEmbedding>& views, const std::vector<int>& labels, const Splits& splits,
                     const ProbeConfig& probe) {
  require(!views.empty(), "tune_beta: no views");
  require(!splits.val.empty(), "tune_beta: validation split is empty");
  require(!splits.train.empty(), "tune_beta: training split is empty");
  const std::size_t k = views.size();
  BetaSearch out;
  if (k == 1) {
    out.beta = {1.0};
    out.val_acc = linear_probe(views[0].Y, labels, splits, probe).val_acc;
    out.candidates = 1;
    return out;
  }

  const double uniform = 1.0 / static_cast<double>(k);
  auto distance = [&](const std::vector<double>& b) {
    double d = 0.0;
    for (double v : b) d += (v - uniform) * (v - uniform);
    return d;
  };
  double best_acc = -1.0, best_dist = 0.0;
  auto consider = [&](const std::vector<double>& b) {
    ++out.candidates;
    const double acc = linear_probe(combine_views(views, b), labels, splits, probe).val_acc;
    const double dist = distance(b);
    if (acc > best_acc || (acc == best_acc && dist < best_dist - 1e-15)) {
      best_acc = acc;
      best_dist = dist;
      out.beta = b;
      return true;
    }
    return false;
  };

  if (k == 2) {
    for (int g = 0; g <= 100; ++g) consider({g / 100.0, 1.0 - g / 100.0});
  } else {
    consider(std::vector<double>(k, uniform));
    for (int sweep = 0; sweep < 50; ++sweep) {
      bool improved = false;
      for (std::size_t c = 0; c < k; ++c) {
        const std::vector<double> base = out.beta;
        const double others = 1.0 - base[c];
        for (int g = 0; g <= 100; ++g) {
          std::vector<double> cand(k);
          const double v = g / 100.0, rest = 1.0 - v;
          for (std::size_t j = 0; j < k; ++j)
            cand[j] = j == c ? v : (others > 1e-12 ? base[j] * rest / others : rest / static_cast<double>(k - 1));
          improved |= consider(cand);
        }
      }
      if (!improved) break;
    }
  }
  out.val_acc = best_acc;
  return out;
}

namespace {

// A collapsed run leaves a single encoder, which EncoderBank::validate rejects.
void validate_saved(const EncoderBank& bank) {
  require(!bank.encoders.empty(), "bank has no encoders");
  if (bank.size() == 1)
    bank.encoders.front().validate();
  else
    bank.validate();
}

}  // namespace

std::string bank_to_json(const SavedBank& saved) {
  validate_saved(saved.bank);
  require(saved.beta.size() == saved.bank.size(), "bank_to_json: beta length must match the bank size");
  nlohmann::ordered_json encoders = nlohmann::ordered_json::array();
  for (const auto& e : saved.bank.encoders) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(e.W.size()));
    for (Index r = 0; r < e.W.rows(); ++r)
      for (Index c = 0; c < e.W.cols(); ++c) flat.push_back(e.W(r, c));
    nlohmann::ordered_json enc;
    enc["alpha"] = e.alpha;
    enc["rows"] = e.W.rows();
    enc["cols"] = e.W.cols();
    enc["W"] = std::move(flat);
    encoders.push_back(std::move(enc));
  }
  nlohmann::ordered_json j;
  j["schema"] = "fdmv.bank/1";
  j["horizon_T"] = saved.bank.encoders.front().horizon_T;
  j["activation"] = to_string(saved.activation);
  j["alphas"] = saved.bank.alphas();
  j["beta"] = saved.beta;
  j["encoders"] = std::move(encoders);
  return j.dump(2) + "\n";
}

SavedBank bank_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    require(j.value("schema", "") == "fdmv.bank/1", "bank file: unsupported schema");
    SavedBank out;
    out.activation = parse_activation(j.at("activation").get<std::string>());
    out.beta = j.at("beta").get<std::vector<double>>();
    const double horizon = j.at("horizon_T").get<double>();
    for (const auto& enc : j.at("encoders")) {
      const auto rows = enc.at("rows").get<Index>();
      const auto cols = enc.at("cols").get<Index>();
      const auto flat = enc.at("W").get<std::vector<double>>();
      require(rows > 0 && cols > 0 && static_cast<Index>(flat.size()) == rows * cols,
              "bank file: W size does not match rows x cols");
      EncoderParams p;
      p.W.resize(rows, cols);
      for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) p.W(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
      p.alpha = enc.at("alpha").get<double>();
      p.horizon_T = horizon;
      out.bank.encoders.push_back(std::move(p));
    }
    validate_saved(out.bank);
    require(out.beta.size() == out.bank.size(), "bank file: beta length must match the bank size");
    check_simplex(out.beta);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bank file: ") + e.what());
  }
}

PipelineResult run_pipeline(const Dataset& data, const TrainConfig& cfg, const ProbeConfig& probe) {
  data.validate();
  const SpectralBasis basis = spectral_basis(data.graph);
  PipelineResult out;
  out.trained = avla(basis, data.features, cfg);
  const Matrix x_hat = gft(basis, data.features);
  for (const auto& p : out.trained.bank.encoders)
    out.views.push_back(encoder_forward_spectral(basis, x_hat, p, cfg.activation));
  out.beta = tune_beta(out.views, data.labels, data.splits, probe);
  out.embedding = combine_views(out.views, out.beta.beta);
  out.probe = linear_probe(out.embedding, data.labels, data.splits, probe);
  return out;
}

}  // namespace fdmv
