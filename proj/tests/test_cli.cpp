#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "fdmv/io.hpp"
#include "fdmv/training.hpp"
#include "json.hpp"

using namespace fdmv;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("fdmv_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(FDMV_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

const char* kSmall = R"({"synth":{"n":40,"p_in":0.3,"p_out":0.05,"feature_dim":6},"train":{"k_init":3,"epochs_n":3}})";

}  // namespace

TEST_CASE("train twice with one seed gives byte-identical reports") {
  TempDir dir;
  write(dir / "c.json", kSmall);
  REQUIRE(run("train --config " + (dir / "c.json") + " --seed 7 --out " + (dir / "a")) == 0);
  REQUIRE(run("train --config " + (dir / "c.json") + " --seed 7 --threads 2 --out " + (dir / "b")) == 0);
  CHECK(read_file(dir / "a/train_report.json") == read_file(dir / "b/train_report.json"));
  CHECK(read_file(dir / "a/bank.json") == read_file(dir / "b/bank.json"));

  const auto ma = load_json(dir / "a/manifest.json");
  const auto mb = load_json(dir / "b/manifest.json");
  CHECK(ma["config_hash"] == mb["config_hash"]);
  CHECK(ma["seed"] == 7);
  CHECK(ma["outputs"].size() == 3);

  const SavedBank bank = bank_from_json(read_file(dir / "a/bank.json"));
  CHECK(bank.beta.size() == bank.bank.size());
  CHECK(bank_to_json(bank) == read_file(dir / "a/bank.json"));
}

TEST_CASE("config hash follows semantic fields only") {
  TempDir dir;
  auto hash = [&](const std::string& args, const std::string& out) {
    REQUIRE(run(args + " --out " + (dir / out) + " diagnose --which theorem") == 0);
    return load_json(dir / (out + "/manifest.json"))["config_hash"].get<std::string>();
  };
  const auto base = hash("", "h0");
  CHECK(hash("--threads 3", "h1") == base);
  CHECK(hash("--seed 1", "h2") != base);
  CHECK(hash("--set diagnose.tau=500", "h3") != base);
  CHECK(hash("--set train.eta=0.2", "h4") != base);
}

TEST_CASE("unknown and mistyped keys exit 1") {
  TempDir dir;
  write(dir / "bad.json", R"({"train":{"k_intt":3}})");
  CHECK(run("train --config " + (dir / "bad.json") + " --out " + (dir / "o")) == 1);
  CHECK_FALSE(fs::exists(dir / "o/manifest.json"));
  write(dir / "typed.json", R"({"train":{"k_init":"three"}})");
  CHECK(run("train --config " + (dir / "typed.json") + " --out " + (dir / "o")) == 1);
  CHECK(run("--set nope=1 walk --out " + (dir / "o")) == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("diagnose --which nothing") == 1);
}

TEST_CASE("missing inputs exit 1, numerical blow-up exits 2") {
  TempDir dir;
  CHECK(run("embed --bank " + (dir / "missing.json") + " --out " + (dir / "o")) == 1);
  write(dir / "c.json", kSmall);
  CHECK(run("train --config " + (dir / "c.json") + " --set train.lr_w=1e300 --out " + (dir / "o")) == 2);
}

TEST_CASE("synth, embed, probe and diagnose chain through files") {
  TempDir dir;
  write(dir / "c.json", kSmall);
  REQUIRE(run("synth --config " + (dir / "c.json") + " --seed 3 --out " + (dir / "ds")) == 0);
  REQUIRE(run("train --config " + (dir / "c.json") + " --seed 3 --out " + (dir / "tr")) == 0);
  const std::string ds = R"({"dataset":{"edges":")" + (dir / "ds/edges.tsv") + R"(","features":")" +
                         (dir / "ds/features.csv") + R"(","labels":")" + (dir / "ds/labels.csv") +
                         R"(","splits":")" + (dir / "ds/splits.json") + R"("}})";
  write(dir / "ds.json", ds);
  REQUIRE(run("embed --config " + (dir / "ds.json") + " --bank " + (dir / "tr/bank.json") + " --out " + (dir / "e")) ==
          0);
  REQUIRE(run("probe --config " + (dir / "ds.json") + " --embedding " + (dir / "e/embedding.csv") + " --out " +
              (dir / "p")) == 0);
  // The dataset written by synth is the one train generated internally.
  CHECK(load_json(dir / "p/probe.json")["test_acc"] == load_json(dir / "tr/probe.json")["test_acc"]);
  for (const char* which : {"rc", "pca", "fourier"}) {
    REQUIRE(run("diagnose --config " + (dir / "ds.json") + " --which " + which + " --embedding " +
                (dir / "e/embedding.csv") + " --out " + (dir / "d")) == 0);
    CHECK(fs::exists(dir / (std::string("d/") + which + ".json")));
  }
  for (const auto& entry : fs::directory_iterator(dir.path / "d"))
    CHECK(entry.path().filename().string().find(".tmp.") == std::string::npos);
}

TEST_CASE("walk and stability reports") {
  TempDir dir;
  REQUIRE(run("walk --set walk.n_walkers=20000 --out " + (dir / "w")) == 0);
  CHECK(load_json(dir / "w/walk.json")["tv_distance"].get<double>() < 0.05);
  REQUIRE(run("stability --set stability.alphas=[1.0] --out " + (dir / "s")) == 0);
  CHECK(load_json(dir / "s/stability.json")["bound_holds"] == true);
}
