#include "fdmv/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unistd.h>

namespace fdmv {

namespace fs = std::filesystem;

void Splits::validate(Index n) const {
  std::set<Index> seen;
  for (const auto* part : {&train, &val, &test}) {
    for (Index i : *part) {
      require(i >= 0 && i < n, "split index " + std::to_string(i) + " out of range for n=" + std::to_string(n));
      require(seen.insert(i).second, "split overlap: node " + std::to_string(i) + " appears twice");
    }
  }
}

int Dataset::n_classes() const {
  int top = -1;
  for (int l : labels) top = std::max(top, l);
  return top + 1;
}

void Dataset::validate() const {
  const Index n = graph.n_nodes();
  require(n > 0, "dataset graph is empty");
  require(features.rows() == n, "feature rows (" + std::to_string(features.rows()) + ") do not match node count (" +
                                    std::to_string(n) + ")");
  require(features.cols() > 0, "features have no columns");
  require(features.allFinite(), "features must be finite");
  require(static_cast<Index>(labels.size()) == n, "label count does not match node count");
  for (int l : labels) require(l >= -1, "labels must be >= -1");
  splits.validate(n);
}

bool operator==(const Splits& a, const Splits& b) {
  return a.train == b.train && a.val == b.val && a.test == b.test;
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.graph == b.graph && a.features == b.features && a.labels == b.labels && a.splits == b.splits;
}

void SynthSpec::validate() const {
  require(n >= 2, "synth: n must be >= 2");
  require(n_blocks >= 1 && n % n_blocks == 0, "synth: n must be divisible by n_blocks");
  require(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0, "synth: probabilities must be in [0, 1]");
  require(feature_dim >= n_blocks, "synth: feature_dim must be >= n_blocks");
  require(std::isfinite(class_mean_separation) && class_mean_separation >= 0.0, "synth: separation must be >= 0");
  require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, "synth: noise_sigma must be >= 0");
}

Splits random_splits(Index n, std::uint64_t seed, double train_fraction, double val_fraction) {
  require(n >= 1, "splits need at least one node");
  require(train_fraction >= 0.0 && val_fraction >= 0.0 && train_fraction + val_fraction <= 1.0,
          "split fractions must be nonnegative and sum to <= 1");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto rng = derive_stream(seed, "splits");
  for (std::size_t i = order.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  Splits s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

Dataset synth_sbm(const SynthSpec& spec) {
  spec.validate();
  const Index n = spec.n;
  const Index block = n / spec.n_blocks;
  auto graph_rng = derive_stream(spec.seed, "sbm-graph");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double p = (i / block == j / block) ? spec.p_in : spec.p_out;
      if (unit(graph_rng) < p) edges.push_back({i, j, 1.0});
    }

  Dataset d;
  d.graph = build_graph(n, edges);
  d.labels.resize(static_cast<std::size_t>(n));
  d.features.resize(n, spec.feature_dim);
  auto feature_rng = derive_stream(spec.seed, "sbm-features");
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i / block);
    d.labels[static_cast<std::size_t>(i)] = c;
    for (Index f = 0; f < spec.feature_dim; ++f)
      d.features(i, f) = spec.noise_sigma * normal(feature_rng) + (f == c ? spec.class_mean_separation : 0.0);
  }
  d.splits = random_splits(n, spec.seed);
  d.validate();
  return d;
}

Graph synth_cycle(Index n) {
  require(n >= 3, "cycle needs n >= 3");
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0});
  return build_graph(n, edges);
}

Graph synth_path(Index n) {
  require(n >= 2, "path needs n >= 2");
  std::vector<Edge> edges;
  for (Index i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  return build_graph(n, edges);
}

Graph synth_grid(Index rows, Index cols) {
  require(rows >= 2 && cols >= 2, "grid needs at least 2 rows and 2 columns");
  std::vector<Edge> edges;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      const Index v = r * cols + c;
      if (c + 1 < cols) edges.push_back({v, v + 1, 1.0});
      if (r + 1 < rows) edges.push_back({v, v + cols, 1.0});
    }
  return build_graph(rows * cols, edges);
}

Graph synth_erdos_renyi(Index n, double p, std::uint64_t seed, bool connected) {
  require(n >= 1, "random graph needs n >= 1");
  require(std::isfinite(p) && p >= 0.0 && p <= 1.0, "edge probability must lie in [0, 1]");
  auto rng = derive_stream(seed, "er-graph");
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (coin(rng)) edges.push_back({i, j, 1.0});
  if (connected) {
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 1; k < order.size(); ++k) edges.push_back({order[k - 1], order[k], 1.0});
  }
  return build_graph(n, edges);
}

Graph graph_from_spec(const std::string& spec, std::uint64_t seed) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
  auto bad = [&]() { return ValidationError("bad graph spec '" + spec + "' (cycle:N | path:N | grid:R:C | er:N:P | random:N:P)"); };
  auto integer = [&](const std::string& t) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(t, &used);
    } catch (const std::exception&) {
      throw bad();
    }
    if (used != t.size()) throw bad();
    return static_cast<Index>(v);
  };
  if (parts.empty()) throw bad();
  const std::string& kind = parts[0];
  if (kind == "cycle" && parts.size() == 2) return synth_cycle(integer(parts[1]));
  if (kind == "path" && parts.size() == 2) return synth_path(integer(parts[1]));
  if (kind == "grid" && parts.size() == 3) return synth_grid(integer(parts[1]), integer(parts[2]));
  if ((kind == "er" || kind == "random") && parts.size() == 3) {
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(parts[2], &used);
    } catch (const std::exception&) {
      throw bad();
    }
    if (used != parts[2].size()) throw bad();
    return synth_erdos_renyi(integer(parts[1]), p, seed, kind == "random");
  }
  throw bad();
}

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
      field.remove_suffix(1);
    out.push_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  if (tok.empty()) return false;
  if constexpr (std::is_floating_point_v<T>) {
    if (tok.front() == '+') tok.remove_prefix(1);
  }
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u(std::istream& in, int bytes, const char* what) {
  unsigned char b[8] = {};
  if (!in.read(reinterpret_cast<char*>(b), bytes))
    throw ValidationError(std::string("binary matrix: truncated while reading ") + what);
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

constexpr std::uint32_t kBinaryVersion = 1;

}  // namespace

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::string& column_prefix) {
  for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << column_prefix << j;
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

Matrix read_matrix_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    width = split_commas(line).size();
    break;
  }
  if (width == 0) return Matrix(0, 0);
  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto fields = split_commas(line);
    if (fields.size() != width)
      throw ValidationError(source + ": line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                            " fields, found " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < width; ++c) {
      double v = 0.0;
      if (!parse_number(fields[c], v) || !std::isfinite(v))
        throw ValidationError(source + ": line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                              ": invalid or non-finite value '" + std::string(fields[c]) + "'");
      values.push_back(v);
    }
    ++rows;
  }
  Matrix m(rows, static_cast<Index>(width));
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = values[static_cast<std::size_t>(i * m.cols() + j)];
  return m;
}

void write_matrix_binary(std::ostream& out, const Matrix& m) {
  out.write("FDMV", 4);
  put_u32(out, kBinaryVersion);
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) put_u64(out, std::bit_cast<std::uint64_t>(m(i, j)));
}

Matrix read_matrix_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "FDMV", 4) != 0) throw ValidationError("binary matrix: bad magic");
  const auto version = get_u(in, 4, "version");
  if (version != kBinaryVersion)
    throw ValidationError("binary matrix: unsupported version " + std::to_string(version));
  const auto rows = get_u(in, 8, "rows");
  const auto cols = get_u(in, 8, "cols");
  constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 36;
  if (rows > kMaxEntries || cols > kMaxEntries || (cols != 0 && rows > kMaxEntries / cols))
    throw ValidationError("binary matrix: dimensions " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " overflow");
  const auto here = in.tellg();
  if (here != std::streampos(-1) && in.seekg(0, std::ios::end)) {
    const auto available = static_cast<std::uint64_t>(in.tellg() - here);
    in.seekg(here);
    if (available < rows * cols * 8)
      throw ValidationError("binary matrix: header declares " + std::to_string(rows) + "x" + std::to_string(cols) +
                            " but only " + std::to_string(available) + " data bytes follow");
  }
  in.clear();
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = std::bit_cast<double>(get_u(in, 8, "data"));
  return m;
}

void save_matrix(const std::string& path, const Matrix& m, const std::string& column_prefix) {
  std::ostringstream out;
  if (fs::path(path).extension() == ".bin")
    write_matrix_binary(out, m);
  else
    write_matrix_csv(out, m, column_prefix);
  atomic_write(path, out.str());
}

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open matrix file '" + path + "'");
  if (fs::path(path).extension() == ".bin") return read_matrix_binary(in);
  return read_matrix_csv(in, path);
}

void write_labels_csv(std::ostream& out, const std::vector<int>& labels) {
  out << "node,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
}

std::vector<int> read_labels_csv(std::istream& in, Index n_nodes) {
  std::vector<int> labels(static_cast<std::size_t>(n_nodes), -1);
  std::vector<bool> seen(labels.size(), false);
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto fields = split_commas(line);
    if (header) {
      header = false;
      if (fields.size() == 2 && fields[0] == "node" && fields[1] == "label") continue;
    }
    auto where = [&] { return "labels: line " + std::to_string(line_no) + ": "; };
    if (fields.size() != 2) throw ValidationError(where() + "expected 'node,label'");
    long long node = 0;
    int label = 0;
    if (!parse_number(fields[0], node) || node < 0 || node >= n_nodes)
      throw ValidationError(where() + "invalid node index '" + std::string(fields[0]) + "'");
    if (!parse_number(fields[1], label) || label < -1)
      throw ValidationError(where() + "invalid label '" + std::string(fields[1]) + "'");
    if (seen[static_cast<std::size_t>(node)])
      throw ValidationError(where() + "node " + std::to_string(node) + " labeled twice");
    seen[static_cast<std::size_t>(node)] = true;
    labels[static_cast<std::size_t>(node)] = label;
  }
  return labels;
}

nlohmann::json splits_to_json(const Splits& s) {
  return nlohmann::json{{"train", s.train}, {"val", s.val}, {"test", s.test}};
}

Splits splits_from_json(const nlohmann::json& j) {
  require(j.is_object(), "splits: expected a JSON object");
  for (const auto& [key, value] : j.items())
    require(key == "train" || key == "val" || key == "test", "splits: unknown key '" + key + "'");
  Splits s;
  auto part = [&](const char* key, std::vector<Index>& out) {
    if (!j.contains(key)) return;
    require(j[key].is_array(), std::string("splits: '") + key + "' must be an array");
    for (const auto& v : j[key]) {
      require(v.is_number_integer(), std::string("splits: '") + key + "' must hold integers");
      out.push_back(v.get<Index>());
    }
  };
  part("train", s.train);
  part("val", s.val);
  part("test", s.test);
  return s;
}

Dataset load_dataset(const std::string& edge_path, const std::string& feature_path, const std::string& label_path,
                     const std::string& split_path) {
  Dataset d;
  d.features = load_matrix(feature_path);
  require(d.features.rows() > 0, "feature file '" + feature_path + "' has no rows");
  const Index n = d.features.rows();
  {
    std::ifstream in(edge_path);
    if (!in) throw ValidationError("cannot open edge list '" + edge_path + "'");
    Index top = -1;
    auto edges = parse_edge_list(in, &top);
    require(top < n, "edge list references node " + std::to_string(top) + " but features have " +
                         std::to_string(n) + " rows");
    d.graph = build_graph(n, edges);
  }
  {
    std::ifstream in(label_path);
    if (!in) throw ValidationError("cannot open label file '" + label_path + "'");
    d.labels = read_labels_csv(in, n);
  }
  try {
    d.splits = splits_from_json(load_json(split_path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("splits file '" + split_path + "': " + e.what());
  }
  d.validate();
  return d;
}

DatasetPaths save_dataset(const Dataset& d, const std::string& dir) {
  d.validate();
  fs::create_directories(dir);
  DatasetPaths p{(fs::path(dir) / "edges.tsv").string(), (fs::path(dir) / "features.csv").string(),
                 (fs::path(dir) / "labels.csv").string(), (fs::path(dir) / "splits.json").string()};
  std::ostringstream edges, labels;
  write_edge_list(edges, d.graph);
  atomic_write(p.edges, edges.str());
  save_matrix(p.features, d.features, "f");
  write_labels_csv(labels, d.labels);
  atomic_write(p.labels, labels.str());
  save_json(p.splits, splits_to_json(d.splits));
  return p;
}

void atomic_write(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ValidationError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw ValidationError("cannot rename into '" + path + "': " + ec.message());
  }
}

void save_json(const std::string& path, const nlohmann::json& j) { atomic_write(path, j.dump(2) + "\n"); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json load_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace fdmv
