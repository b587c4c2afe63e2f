#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fdmv/diagnostics.hpp"
#include "fdmv/encoder.hpp"
#include "fdmv/graph.hpp"
#include "fdmv/io.hpp"
#include "fdmv/special.hpp"
#include "fdmv/training.hpp"
#include "fdmv/walk.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace fdmv;

namespace {

constexpr const char* kVersion = "0.1.0";

json default_config() {
  const TrainConfig t;
  const ProbeConfig p;
  const SynthSpec s;
  const WalkConfig w;
  return json{
      {"seed", 0},
      {"threads", 1},
      {"output_dir", "out"},
      {"dataset", {{"edges", ""}, {"features", ""}, {"labels", ""}, {"splits", ""}}},
      {"synth",
       {{"n", s.n},
        {"n_blocks", s.n_blocks},
        {"p_in", s.p_in},
        {"p_out", s.p_out},
        {"feature_dim", s.feature_dim},
        {"class_mean_separation", s.class_mean_separation},
        {"noise_sigma", s.noise_sigma}}},
      {"train",
       {{"k_init", t.k_init},
        {"lr_w", t.lr_w},
        {"lr_alpha", t.lr_alpha},
        {"epochs_n", t.epochs_n},
        {"clip_eps", t.clip_eps},
        {"merge_delta", t.merge_delta},
        {"eta", t.eta},
        {"grad_mode", to_string(t.grad_mode)},
        {"max_rounds", t.max_rounds},
        {"horizon_T", t.horizon_T},
        {"d_hid", t.d_hid},
        {"activation", to_string(t.activation)},
        {"initial_alphas", json::array()}}},
      {"probe", {{"l2_weight", p.l2_weight}, {"epochs", p.epochs}, {"lr", p.lr}}},
      {"embed", {{"bank", ""}, {"format", "csv"}}},
      {"diagnose",
       {{"embedding", ""},
        {"alphas", json::array()},
        {"theta", 0.9},
        {"graph", "random:20:0.9"},
        {"alpha_local", 0.1},
        {"alpha_global", 0.9},
        {"tau", 1000.0},
        {"m", 4},
        {"sign", "alternating"},
        {"tolerance", 0.1}}},
      {"walk",
       {{"graph", "cycle:10"},
        {"alpha", w.alpha},
        {"t_end", w.t_end},
        {"delta_tau", w.delta_tau},
        {"n_walkers", w.n_walkers},
        {"start", 0},
        {"markov", w.markov}}},
      {"stability",
       {{"graph", "random:20:0.3"},
        {"mode", "init_state"},
        {"alphas", {0.3, 0.6, 1.0}},
        {"betas", json::array()},
        {"times", {1.0, 2.0, 5.0, 10.0, 20.0, 50.0}},
        {"epsilon", 1e-3},
        {"dim", 4},
        {"ratio", 0.1},
        {"perturb", "both"}}},
  };
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return !(a.is_number_integer() && b.is_number_float());
  return a.type() == b.type();
}

void assign_key(json& base, const std::string& path, const json& value) {
  if (base.is_object() && value.is_object()) {
    for (const auto& [k, v] : value.items()) {
      const std::string sub = path.empty() ? k : path + "." + k;
      if (!base.contains(k)) throw ValidationError("unknown config key '" + sub + "'");
      assign_key(base[k], sub, v);
    }
    return;
  }
  if (!same_kind(base, value))
    throw ValidationError("config key '" + path + "' expects a " + std::string(base.type_name()) + ", got " +
                          value.type_name());
  if (base.is_number_unsigned() && value.is_number_integer() && value.get<std::int64_t>() < 0)
    throw ValidationError("config key '" + path + "' must be nonnegative");
  base = value;
}

// "train.k_init=3": the value is read as JSON, falling back to a bare string.
void apply_override(json& cfg, const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("--set expects key=value, got '" + item + "'");
  const std::string key = item.substr(0, eq);
  const std::string text = item.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json patch = value;
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string tok; std::getline(ss, tok, '.');) parts.push_back(tok);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  assign_key(cfg, "", patch);
}

std::uint64_t fnv1a(const std::string& text) { return hash_label(text); }

std::string config_hash(const json& cfg) {
  json semantic = cfg;
  semantic.erase("output_dir");
  semantic.erase("threads");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(semantic.dump())));
  return buf;
}

struct Run {
  json cfg;
  std::string command;
  fs::path out;
  std::vector<std::string> outputs;

  std::uint64_t seed() const { return cfg["seed"].get<std::uint64_t>(); }
  int threads() const { return cfg["threads"].get<int>(); }

  std::string path(const std::string& name) {
    outputs.push_back(name);
    return (out / name).string();
  }
  void write(const std::string& name, const std::string& text) { atomic_write(path(name), text); }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
};

void require_file(const std::string& p, const std::string& key) {
  if (!fs::is_regular_file(p)) throw ValidationError("config key '" + key + "': no such file '" + p + "'");
}

void check_paths(const json& cfg) {
  const auto& d = cfg["dataset"];
  int given = 0;
  for (const auto& [k, v] : d.items()) given += !v.get<std::string>().empty();
  if (given != 0 && given != 4) throw ValidationError("dataset needs all of edges, features, labels, splits");
  for (const auto& [k, v] : d.items())
    if (given == 4) require_file(v.get<std::string>(), "dataset." + k);
  for (const char* key : {"bank"})
    if (auto p = cfg["embed"][key].get<std::string>(); !p.empty()) require_file(p, std::string("embed.") + key);
  if (auto p = cfg["diagnose"]["embedding"].get<std::string>(); !p.empty()) require_file(p, "diagnose.embedding");
}

Dataset load_data(const Run& run) {
  const auto& d = run.cfg["dataset"];
  if (!d["edges"].get<std::string>().empty())
    return load_dataset(d["edges"], d["features"], d["labels"], d["splits"]);
  const auto& s = run.cfg["synth"];
  SynthSpec spec;
  spec.n = s["n"];
  spec.n_blocks = s["n_blocks"];
  spec.p_in = s["p_in"];
  spec.p_out = s["p_out"];
  spec.feature_dim = s["feature_dim"];
  spec.class_mean_separation = s["class_mean_separation"];
  spec.noise_sigma = s["noise_sigma"];
  spec.seed = run.seed();
  return synth_sbm(spec);
}

TrainConfig train_config(const Run& run) {
  const auto& t = run.cfg["train"];
  TrainConfig c;
  c.k_init = t["k_init"];
  c.lr_w = t["lr_w"];
  c.lr_alpha = t["lr_alpha"];
  c.epochs_n = t["epochs_n"];
  c.clip_eps = t["clip_eps"];
  c.merge_delta = t["merge_delta"];
  c.eta = t["eta"];
  c.grad_mode = parse_grad_mode(t["grad_mode"]);
  c.max_rounds = t["max_rounds"];
  c.horizon_T = t["horizon_T"];
  c.d_hid = t["d_hid"];
  c.activation = parse_activation(t["activation"]);
  c.initial_alphas = t["initial_alphas"].get<std::vector<double>>();
  c.seed = run.seed();
  c.threads = run.threads();
  c.validate();
  return c;
}

ProbeConfig probe_config(const Run& run) {
  const auto& p = run.cfg["probe"];
  ProbeConfig c;
  c.l2_weight = p["l2_weight"];
  c.epochs = p["epochs"];
  c.lr = p["lr"];
  c.seed = run.seed();
  c.validate();
  return c;
}

json probe_json(const ProbeResult& r) {
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  return json{{"train_acc", num(r.train_acc)}, {"val_acc", num(r.val_acc)}, {"test_acc", num(r.test_acc)}};
}

json vec_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(std::isfinite(v(i)) ? json(v(i)) : json(nullptr));
  return a;
}

std::string matrix_name(const Run& run, const std::string& stem) {
  const std::string fmt = run.cfg["embed"]["format"];
  if (fmt != "csv" && fmt != "bin") throw ValidationError("embed.format must be csv or bin");
  return stem + "." + fmt;
}

// ---- subcommands ----

void cmd_synth(Run& run) {
  const Dataset d = load_data(run);
  save_dataset(d, run.out.string());
  for (const char* f : {"edges.tsv", "features.csv", "labels.csv", "splits.json"}) run.outputs.push_back(f);
}

void cmd_train(Run& run) {
  const Dataset d = load_data(run);
  const PipelineResult r = run_pipeline(d, train_config(run), probe_config(run));
  run.write("train_report.json", r.trained.report.to_json());
  run.write("bank.json", bank_to_json({r.trained.bank, train_config(run).activation, r.beta.beta}));
  json probe = probe_json(r.probe);
  probe["beta"] = r.beta.beta;
  probe["beta_val_acc"] = r.beta.val_acc;
  run.write_json("probe.json", probe);
}

void cmd_embed(Run& run) {
  const std::string bank_path = run.cfg["embed"]["bank"];
  if (bank_path.empty()) throw ValidationError("embed needs embed.bank (or --bank)");
  const SavedBank saved = bank_from_json(read_file(bank_path));
  const Dataset d = load_data(run);
  const SpectralBasis basis = spectral_basis(d.graph);
  const Matrix x_hat = gft(basis, d.features);
  std::vector<ViewEmbedding> views;
  for (const auto& p : saved.bank.encoders)
    views.push_back(encoder_forward_spectral(basis, x_hat, p, saved.activation));
  save_matrix(run.path(matrix_name(run, "embedding")), combine_views(views, saved.beta));
  for (std::size_t k = 0; k < views.size(); ++k)
    save_matrix(run.path(matrix_name(run, "view_" + std::to_string(k))), views[k].Y);
}

Matrix diagnose_input(const Run& run, const Dataset& d) {
  const std::string p = run.cfg["diagnose"]["embedding"];
  return p.empty() ? d.features : load_matrix(p);
}

void cmd_probe(Run& run) {
  const Dataset d = load_data(run);
  const Matrix y = diagnose_input(run, d);
  require(y.rows() == d.n_nodes(), "embedding rows do not match the dataset");
  run.write_json("probe.json", probe_json(linear_probe(y, d.labels, d.splits, probe_config(run))));
}

void cmd_avla_trace(Run& run) {
  const Dataset d = load_data(run);
  const AvlaResult r = avla(spectral_basis(d.graph), d.features, train_config(run));
  run.write("train_report.json", r.report.to_json());
  std::ostringstream csv;
  csv.precision(17);
  csv << "round,epoch,loss,k,alpha\n";
  for (const auto& e : r.report.epochs)
    for (std::size_t k = 0; k < e.alphas.size(); ++k)
      csv << e.round << ',' << e.epoch << ',' << e.loss << ',' << k << ',' << e.alphas[k] << '\n';
  run.write("alpha_trace.csv", csv.str());
  json merges = json::array();
  for (const auto& m : r.report.merge_events)
    merges.push_back({{"round", m.round}, {"merged", m.merged}, {"survivor", m.survivor}});
  run.write_json("merge_events.json", json{{"schema", "fdmv.merge_log/1"},
                                           {"merge_events", merges},
                                           {"k_per_round", r.report.k_per_round},
                                           {"final_alphas", r.report.final_alphas},
                                           {"single_view", r.report.single_view}});
}

// Named embeddings to diagnose: the configured matrix, or one seeded view per alpha.
std::vector<std::pair<std::string, Matrix>> diagnose_targets(const Run& run, const Dataset& d,
                                                             const SpectralBasis& basis) {
  const auto alphas = run.cfg["diagnose"]["alphas"].get<std::vector<double>>();
  if (alphas.empty()) return {{"embedding", diagnose_input(run, d)}};
  const TrainConfig t = train_config(run);
  std::vector<std::pair<std::string, Matrix>> out;
  auto rng = derive_stream(run.seed(), "diagnose-init");
  const Matrix w = init_weights(d.features.cols(), hidden_dim(d.features.cols(), t.d_hid), rng);
  for (double a : alphas) {
    EncoderParams p{w, a, t.horizon_T};
    std::ostringstream name;
    name << "alpha=" << a;
    out.emplace_back(name.str(), encoder_forward(basis, d.features, p, t.activation).Y);
  }
  return out;
}

void cmd_diagnose(Run& run, const std::string& which) {
  const auto& c = run.cfg["diagnose"];
  if (which == "theorem") {
    const Graph g = graph_from_spec(c["graph"], run.seed());
    const SpectralBasis basis = spectral_basis(g);
    auto rng = derive_stream(run.seed(), "theorem-signal");
    std::normal_distribution<double> normal;
    Vector x(g.n_nodes());
    for (Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
    const std::string sign_name = c["sign"];
    AsymptoticSign sign;
    if (sign_name == "alternating")
      sign = AsymptoticSign::alternating;
    else if (sign_name == "all_positive")
      sign = AsymptoticSign::all_positive;
    else
      throw ValidationError("diagnose.sign must be alternating or all_positive");
    const SpectralReport r =
        check_theorem_sgi(basis, x, c["alpha_local"], c["alpha_global"], c["tau"], c["m"], sign, c["tolerance"]);
    auto view = [](const TheoremView& v) {
      json b = json::array();
      for (Index j = 0; j < v.b.cols(); ++j) b.push_back(vec_json(v.b.col(j)));
      return json{{"alpha", v.alpha},       {"order", v.order},
                  {"exact", vec_json(v.exact)}, {"asymptotic", vec_json(v.asymptotic)},
                  {"b", b},                 {"output_coefficients", vec_json(v.output_coefficients)}};
    };
    run.write_json("theorem.json",
                   json{{"schema", "fdmv.theorem/1"},
                        {"graph", c["graph"]},
                        {"n_components", g.n_components()},
                        {"tau", r.tau},
                        {"m", r.m},
                        {"sign", sign_name},
                        {"tolerance", r.tolerance},
                        {"positivity", r.positivity},
                        {"monotone", r.monotone},
                        {"ordering", r.ordering},
                        {"agreement", r.agreement},
                        {"max_relative_error", r.max_relative_error},
                        {"verdict", r.passed() ? "PASS" : "FAIL"},
                        {"violations", r.violations},
                        {"eigenvalues", vec_json(r.eigenvalues)},
                        {"local", view(r.local)},
                        {"global", view(r.global)}});
    std::cout << "theorem: positivity=" << r.positivity << " monotone=" << r.monotone << " ordering=" << r.ordering
              << " agreement=" << r.agreement << " -> " << (r.passed() ? "PASS" : "FAIL") << '\n';
    return;
  }

  const Dataset d = load_data(run);
  const SpectralBasis basis = spectral_basis(d.graph);
  const auto targets = diagnose_targets(run, d, basis);
  json reports = json::array();
  for (const auto& [name, y] : targets) {
    require(y.rows() == d.n_nodes(), "embedding rows do not match the dataset");
    json rep{{"name", name}};
    if (which == "rc") {
      json classes = json::array();
      for (const auto& [label, r] : rc_ratio(y, d.labels)) {
        classes.push_back({{"class", label},
                           {"defined", r.defined},
                           {"r", r.defined ? json(r.r) : json(nullptr)},
                           {"d_intra", r.d_intra},
                           {"d_inter", r.d_inter},
                           {"members", r.members},
                           {"flag", r.flag}});
      }
      rep["classes"] = classes;
    } else if (which == "pca") {
      rep["theta"] = c["theta"];
      rep["effective_rank"] = effective_rank(y, c["theta"]);
      rep["spectrum"] = vec_json(energy_spectrum(y));
    } else if (which == "fourier") {
      rep["eigenvalues"] = vec_json(basis.eigenvalues);
      rep["spread"] = vec_json(fourier_spread(basis, y));
    } else {
      throw ValidationError("--which must be rc, pca, fourier or theorem");
    }
    reports.push_back(rep);
  }
  run.write_json(which + ".json", json{{"schema", "fdmv." + which + "/1"}, {"reports", reports}});
}

void cmd_walk(Run& run) {
  const auto& c = run.cfg["walk"];
  const Graph g = graph_from_spec(c["graph"], run.seed());
  WalkConfig w;
  w.alpha = c["alpha"];
  w.t_end = c["t_end"];
  w.delta_tau = c["delta_tau"];
  w.n_walkers = c["n_walkers"];
  w.markov = c["markov"];
  w.seed = run.seed();
  w.threads = run.threads();
  w.validate();
  const Index start = c["start"];
  require(start >= 0 && start < g.n_nodes(), "walk.start is out of range");
  const Vector emp = random_walk_sim(g, w, start);
  const Vector ref = walk_reference(g, w.markov ? 1.0 : w.alpha, w.t_end, start);
  std::ostringstream csv;
  csv.precision(17);
  csv << "node,empirical,reference\n";
  for (Index i = 0; i < emp.size(); ++i) csv << i << ',' << emp(i) << ',' << ref(i) << '\n';
  run.write("walk.csv", csv.str());
  const double tv = tv_distance(emp, ref);
  run.write_json("walk.json", json{{"schema", "fdmv.walk/1"},
                                   {"graph", c["graph"]},
                                   {"alpha", w.alpha},
                                   {"t_end", w.t_end},
                                   {"delta_tau", w.delta_tau},
                                   {"n_walkers", w.n_walkers},
                                   {"markov", w.markov},
                                   {"tv_distance", tv}});
  std::cout << "walk: tv=" << tv << '\n';
}

void cmd_stability(Run& run) {
  const auto& c = run.cfg["stability"];
  const Graph g = graph_from_spec(c["graph"], run.seed());
  const SpectralBasis basis = spectral_basis(g);
  const auto alphas = c["alphas"].get<std::vector<double>>();
  auto betas = c["betas"].get<std::vector<double>>();
  require(!alphas.empty(), "stability.alphas must not be empty");
  if (betas.empty()) betas.assign(alphas.size(), 1.0 / static_cast<double>(alphas.size()));
  require(betas.size() == alphas.size(), "stability.betas must match stability.alphas");
  std::vector<Channel> channels;
  for (std::size_t k = 0; k < alphas.size(); ++k) channels.push_back({alphas[k], betas[k]});
  const auto times = c["times"].get<std::vector<double>>();
  const double eps = c["epsilon"];
  const Index dim = c["dim"];
  require(dim >= 1, "stability.dim must be >= 1");

  auto rng = derive_stream(run.seed(), "stability");
  std::normal_distribution<double> normal;
  auto gaussian = [&](Index r, Index k) {
    Matrix m(r, k);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < k; ++j) m(i, j) = normal(rng);
    return m;
  };
  const Index n = g.n_nodes();
  const std::string mode = c["mode"];
  StabilityCurve curve;
  if (mode == "init_state") {
    const Matrix y0 = gaussian(n, dim);
    curve = stability_init_state(basis, y0, gaussian(n, dim), eps, channels, times);
  } else if (mode == "weights") {
    const Matrix x = gaussian(n, dim);
    const Matrix w = gaussian(dim, dim);
    Matrix dw = gaussian(dim, dim);
    dw *= eps / (x * dw).norm();
    curve = stability_weights(basis, x, w, dw, channels, times);
  } else if (mode == "topology") {
    curve = stability_topology(g, gaussian(n, dim), c["ratio"], parse_perturb_mode(c["perturb"]), run.seed(),
                               channels, times);
  } else {
    throw ValidationError("stability.mode must be init_state, weights or topology");
  }
  std::ostringstream csv;
  csv.precision(17);
  csv << "t,discrepancy,bound\n";
  for (std::size_t i = 0; i < curve.times.size(); ++i)
    csv << curve.times[i] << ',' << curve.discrepancy[i] << ',' << curve.bound[i] << '\n';
  run.write("stability.csv", csv.str());
  run.write_json("stability.json", json{{"schema", "fdmv.stability/1"},
                                        {"mode", mode},
                                        {"epsilon", curve.epsilon},
                                        {"bound_alpha", curve.bound_alpha},
                                        {"fitted_C", curve.fitted_C},
                                        {"bound_holds", curve.bound_holds},
                                        {"verdict", curve.bound_holds ? "PASS" : "FAIL"}});
  std::cout << "stability: bound " << (curve.bound_holds ? "holds" : "violated") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional graph diffusion encoders, multi-view training and verification harnesses"};
  app.require_subcommand(1);
  app.footer(
      "Precedence: built-in defaults < --config file < --set key=value < dedicated flags.\n"
      "Graph specs: cycle:N, path:N, grid:R:C, er:N:P, random:N:P (connected).");

  std::string config_path, out_dir, which = "rc", bank, embedding, sign;
  std::vector<std::string> overrides;
  std::int64_t seed = -1;
  int threads = 0;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (config key output_dir)");
  app.add_option("--seed", seed, "master seed for all randomness");
  app.add_option("--threads", threads, "worker cap");
  app.add_option("--set", overrides, "override one config key, e.g. train.k_init=3");

  std::vector<std::pair<CLI::App*, std::string>> subs;
  auto sub = [&](const std::string& name, const std::string& help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->fallthrough();
    subs.emplace_back(s, name);
    return s;
  };
  sub("synth", "write a synthetic SBM dataset (edges.tsv, features.csv, labels.csv, splits.json)");
  sub("train", "AVLA training, beta tuning and probe (bank.json, train_report.json, probe.json)");
  sub("embed", "combined and per-view embeddings from a saved bank")
      ->add_option("--bank", bank, "bank.json (config key embed.bank)");
  sub("probe", "linear probe of an embedding, raw features by default (probe.json)")
      ->add_option("--embedding", embedding, "matrix file (config key diagnose.embedding)");
  sub("avla-trace", "AVLA alpha trajectories and merge log (alpha_trace.csv, merge_events.json)");
  auto* diag = sub("diagnose", "rc ratios, PCA spectrum, Fourier spread or the large-time spectral check");
  diag->add_option("--which", which, "rc|pca|fourier|theorem")
      ->check(CLI::IsMember({"rc", "pca", "fourier", "theorem"}));
  diag->add_option("--embedding", embedding, "matrix file (config key diagnose.embedding)");
  diag->add_option("--sign", sign, "expansion sign: alternating|all_positive (config key diagnose.sign)");
  sub("walk", "fractional random walk versus the diffusion solution (walk.csv, walk.json)");
  sub("stability", "perturbation discrepancy curve and bound verdict (stability.csv, stability.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const auto start = std::chrono::steady_clock::now();
  Run run;
  for (const auto& [s, name] : subs)
    if (s->parsed()) run.command = name;
  try {
    run.cfg = default_config();
    if (!config_path.empty()) assign_key(run.cfg, "", load_json(config_path));
    for (const auto& item : overrides) apply_override(run.cfg, item);
    if (!out_dir.empty()) run.cfg["output_dir"] = out_dir;
    if (seed >= 0) run.cfg["seed"] = seed;
    if (threads > 0) run.cfg["threads"] = threads;
    if (!bank.empty()) run.cfg["embed"]["bank"] = bank;
    if (!embedding.empty()) run.cfg["diagnose"]["embedding"] = embedding;
    if (!sign.empty()) run.cfg["diagnose"]["sign"] = sign;
    require(run.threads() >= 1, "threads must be >= 1");
    check_paths(run.cfg);

    run.out = run.cfg["output_dir"].get<std::string>();
    fs::create_directories(run.out);

    if (run.command == "synth") cmd_synth(run);
    else if (run.command == "train") cmd_train(run);
    else if (run.command == "embed") cmd_embed(run);
    else if (run.command == "probe") cmd_probe(run);
    else if (run.command == "avla-trace") cmd_avla_trace(run);
    else if (run.command == "diagnose") cmd_diagnose(run, which);
    else if (run.command == "walk") cmd_walk(run);
    else if (run.command == "stability") cmd_stability(run);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    run.write_json("manifest.json", json{{"schema", "fdmv.manifest/1"},
                                         {"command", run.command},
                                         {"version", kVersion},
                                         {"config_hash", config_hash(run.cfg)},
                                         {"seed", run.seed()},
                                         {"threads", run.threads()},
                                         {"wall_time_s", wall},
                                         {"outputs", run.outputs},
                                         {"config", run.cfg}});
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
