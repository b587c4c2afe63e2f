#include <cmath>

#include "doctest.h"
#include "fdmv/io.hpp"
#include "fdmv/walk.hpp"

using namespace fdmv;

TEST_CASE("waiting-time sampler follows the discrete power law") {
  auto rng = derive_stream(3, "test");
  const double alpha = 0.5;
  const int draws = 200000;
  int ones = 0, twos = 0, below_one = 0;
  for (int i = 0; i < draws; ++i) {
    const double n = sample_waiting_steps(alpha, rng);
    below_one += n < 1.0;
    ones += n == 1.0;
    twos += n == 2.0;
  }
  CHECK(below_one == 0);
  WalkConfig cfg;
  cfg.alpha = alpha;
  const double d = cfg.normalization();
  CHECK(d == doctest::Approx(1.0 / 2.612375348685488).epsilon(1e-12));
  CHECK(std::abs(ones / double(draws) - d) < 0.005);
  CHECK(std::abs(twos / double(draws) - d * std::pow(2.0, -1.5)) < 0.005);
}

TEST_CASE("walk configuration checks") {
  WalkConfig cfg;
  cfg.alpha = 0.5;
  CHECK(cfg.move_probability() ==
        doctest::Approx(std::pow(1e-4, 0.5) * 2.0 * std::sqrt(M_PI) / 2.612375348685488).epsilon(1e-12));
  cfg.delta_tau = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.delta_tau = 1e-4;
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.markov = true;
  CHECK_NOTHROW(cfg.validate());
  CHECK_THROWS_AS(random_walk_sim(synth_cycle(4), cfg, 4), ValidationError);
}

TEST_CASE("reference occupancy is a distribution") {
  Graph g = synth_cycle(7);
  for (double a : {0.3, 0.5, 1.0}) {
    Vector q = walk_reference(g, a, 2.0, 3);
    CHECK(q.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q.minCoeff() > -1e-12);
    CHECK(q(2) == doctest::Approx(q(4)).epsilon(1e-12));
  }
  Graph lonely = build_graph(3, std::vector<Edge>{{0, 1, 1.0}});
  CHECK_THROWS_AS(walk_reference(lonely, 0.5, 1.0, 0), ValidationError);
}

TEST_CASE("zero horizon leaves every walker at the start") {
  WalkConfig cfg;
  cfg.t_end = 0.0;
  cfg.n_walkers = 10;
  Vector p = random_walk_sim(synth_cycle(5), cfg, 2);
  CHECK(p(2) == 1.0);
  CHECK(p.sum() == 1.0);
}

TEST_CASE("two-node walk mixes evenly") {
  Graph g = build_graph(2, std::vector<Edge>{{0, 1, 2.5}});
  WalkConfig cfg;
  cfg.alpha = 0.5;
  cfg.t_end = 1e4;
  cfg.delta_tau = 0.1;
  cfg.n_walkers = 100000;
  cfg.seed = 5;
  Vector p = random_walk_sim(g, cfg, 0);
  CHECK(std::abs(p(0) - 0.5) < 0.02);
  CHECK(std::abs(p(1) - 0.5) < 0.02);
}

TEST_CASE("cycle occupancy matches the diffusion solution") {
  Graph g = synth_cycle(10);
  WalkConfig cfg;
  cfg.alpha = 0.5;
  cfg.t_end = 1.0;
  cfg.seed = 11;
  const Vector q = walk_reference(g, 0.5, 1.0, 0);
  double previous = 1.0;
  for (std::int64_t walkers : {1000, 10000, 100000}) {
    cfg.n_walkers = walkers;
    const double tv = tv_distance(random_walk_sim(g, cfg, 0), q);
    CHECK(tv < previous);
    previous = tv;
  }
  CHECK(previous < 0.02);

  WalkConfig markov;
  markov.markov = true;
  markov.t_end = 1.0;
  markov.n_walkers = 100000;
  CHECK(tv_distance(random_walk_sim(g, markov, 0), walk_reference(g, 1.0, 1.0, 0)) < 0.02);
}

TEST_CASE("walk result does not depend on the thread count") {
  Graph g = synth_cycle(6);
  WalkConfig cfg;
  cfg.alpha = 0.4;
  cfg.n_walkers = 3001;
  cfg.seed = 2;
  Vector one = random_walk_sim(g, cfg, 1);
  cfg.threads = 4;
  CHECK(random_walk_sim(g, cfg, 1) == one);
}
