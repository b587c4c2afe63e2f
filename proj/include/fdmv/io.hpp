#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "fdmv/common.hpp"
#include "fdmv/graph.hpp"

namespace fdmv {

struct Splits {
  std::vector<Index> train, val, test;

  /// Disjoint and within [0, n).
  void validate(Index n) const;
};

struct Dataset {
  Graph graph;
  Matrix features;          // N x d_in, one row per node
  std::vector<int> labels;  // -1 = unlabeled
  Splits splits;

  Index n_nodes() const { return graph.n_nodes(); }
  int n_classes() const;
  void validate() const;
};

bool operator==(const Splits& a, const Splits& b);
bool operator==(const Dataset& a, const Dataset& b);

/// Stochastic block model with Gaussian class features. Class c has mean
/// class_mean_separation * e_c, so any two means are separation * sqrt(2) apart.
struct SynthSpec {
  Index n = 200;
  int n_blocks = 2;
  double p_in = 0.5;
  double p_out = 0.05;
  Index feature_dim = 16;
  double class_mean_separation = 1.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Blocks are contiguous node ranges; splits are 48/32/20 of a seeded shuffle.
Dataset synth_sbm(const SynthSpec& spec);

Graph synth_cycle(Index n);
Graph synth_path(Index n);
Graph synth_grid(Index rows, Index cols);
/// G(n, p) with unit weights. `connected` adds the edges of a random
/// Hamiltonian path on top.
Graph synth_erdos_renyi(Index n, double p, std::uint64_t seed, bool connected = false);

/// "cycle:N", "path:N", "grid:R:C", "er:N:P" or "random:N:P" (connected G(n, p)),
/// random kinds seeded by `seed`.
Graph graph_from_spec(const std::string& spec, std::uint64_t seed);

/// Shuffled train/val/test split with the given leading fractions.
Splits random_splits(Index n, std::uint64_t seed, double train_fraction = 0.48, double val_fraction = 0.32);

// Matrices: CSV with a header row, or binary
// "FDMV" | u32 version | u64 rows | u64 cols | rows*cols f64, row-major, little-endian.
void write_matrix_csv(std::ostream& out, const Matrix& m, const std::string& column_prefix);
Matrix read_matrix_csv(std::istream& in, const std::string& source = "csv");
void write_matrix_binary(std::ostream& out, const Matrix& m);
Matrix read_matrix_binary(std::istream& in);

/// Format chosen by extension: ".bin" is binary, anything else CSV.
void save_matrix(const std::string& path, const Matrix& m, const std::string& column_prefix = "dim_");
Matrix load_matrix(const std::string& path);

void write_labels_csv(std::ostream& out, const std::vector<int>& labels);
std::vector<int> read_labels_csv(std::istream& in, Index n_nodes);

nlohmann::json splits_to_json(const Splits& s);
Splits splits_from_json(const nlohmann::json& j);

Dataset load_dataset(const std::string& edge_path, const std::string& feature_path, const std::string& label_path,
                     const std::string& split_path);

struct DatasetPaths {
  std::string edges, features, labels, splits;
};
/// Writes edges.tsv, features.csv, labels.csv and splits.json into `dir`.
DatasetPaths save_dataset(const Dataset& d, const std::string& dir);

/// Writes through a temporary file in the same directory, then renames.
void atomic_write(const std::string& path, const std::string& contents);
void save_json(const std::string& path, const nlohmann::json& j);
nlohmann::json load_json(const std::string& path);
std::string read_file(const std::string& path);

}  // namespace fdmv
