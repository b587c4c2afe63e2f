#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fdmv/diagnostics.hpp"
#include "fdmv/encoder.hpp"
#include "fdmv/fde.hpp"
#include "test_support.hpp"

using namespace fdmv;
using fdmv::testing::random_graph;
using fdmv::testing::random_matrix;

namespace {

// Two Gaussian blobs in R^d, centers `gap` apart along the first axis.
Matrix blobs(Index per_class, Index d, double gap, double spread, std::uint64_t seed, std::vector<int>& labels) {
  Matrix y = spread * random_matrix(2 * per_class, d, seed);
  labels.assign(static_cast<std::size_t>(2 * per_class), 0);
  for (Index i = per_class; i < 2 * per_class; ++i) {
    y(i, 0) += gap;
    labels[static_cast<std::size_t>(i)] = 1;
  }
  return y;
}

Splits all_in_test(Index n, Index n_train) {
  Splits s = random_splits(n, 5, static_cast<double>(n_train) / static_cast<double>(n), 0.0);
  return s;
}

}  // namespace

TEST_CASE("linear probe") {
  std::vector<int> labels;
  Matrix y = blobs(100, 4, 20.0, 1.0, 1, labels);
  ProbeResult r = linear_probe(y, labels, random_splits(200, 3));
  CHECK(r.train_acc == 1.0);
  CHECK(r.val_acc == 1.0);
  CHECK(r.test_acc == 1.0);

  double mean_acc = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Matrix noise = random_matrix(400, 8, seed + 10);
    std::mt19937_64 rng(seed);
    std::vector<int> random_labels(400);
    for (int& l : random_labels) l = static_cast<int>(rng() % 2);
    mean_acc += linear_probe(noise, random_labels, random_splits(400, seed, 0.3, 0.0)).test_acc / 5.0;
  }
  CHECK(std::abs(mean_acc - 0.5) <= 0.1);

  std::vector<int> skewed(50, 0);
  for (int i = 0; i < 15; ++i) skewed[static_cast<std::size_t>(i)] = 1;
  Splits s = random_splits(50, 2, 0.5, 0.0);
  ProbeResult flat = linear_probe(Matrix::Constant(50, 3, 2.0), skewed, s);
  Index majority = 0;
  for (Index i : s.test) majority += skewed[static_cast<std::size_t>(i)] == 0;
  CHECK(flat.test_acc == doctest::Approx(static_cast<double>(majority) / static_cast<double>(s.test.size())));
  CHECK(std::isnan(flat.val_acc));

  std::vector<int> one_class(50, 1);
  CHECK_THROWS_AS(linear_probe(y.topRows(50), one_class, s), ValidationError);
  std::vector<int> unlabeled = skewed;
  unlabeled[static_cast<std::size_t>(s.test[0])] = -1;
  CHECK_THROWS_AS(linear_probe(Matrix::Constant(50, 3, 2.0), unlabeled, s), ValidationError);
}

TEST_CASE("probe is near-equivariant under rotation and translation") {
  SynthSpec spec;
  spec.seed = 4;
  spec.class_mean_separation = 1.0;
  Dataset d = synth_sbm(spec);
  ProbeResult base = linear_probe(d.features, d.labels, d.splits);
  Matrix q = Eigen::HouseholderQR<Matrix>(random_matrix(16, 16, 8)).householderQ();
  Matrix moved = d.features * q;
  moved.rowwise() += random_matrix(1, 16, 9).row(0) * 10.0;
  ProbeResult after = linear_probe(moved, d.labels, d.splits);
  CHECK(std::abs(after.test_acc - base.test_acc) < 0.005);
  CHECK(std::abs(after.val_acc - base.val_acc) < 0.005);
}

TEST_CASE("class separation ratio") {
  std::vector<int> labels;
  Matrix y = blobs(40, 3, 50.0, 1.0, 2, labels);
  auto r = rc_ratio(y, labels);
  REQUIRE(r.size() == 2);
  CHECK(r[0].defined);
  // Mean within-blob distance of a 3-d standard normal pair is about 2.2.
  CHECK(r[0].r > 15.0);
  CHECK(r[1].r > 15.0);

  auto same = rc_ratio(Matrix::Ones(6, 2), std::vector<int>{0, 0, 0, 1, 1, 1});
  CHECK_FALSE(same[0].defined);
  CHECK(same[0].flag == "zero_intra_distance");
  CHECK_FALSE(same[1].defined);

  std::vector<int> mixed_labels(400);
  for (std::size_t i = 0; i < 400; ++i) mixed_labels[i] = static_cast<int>(i % 2);
  auto mixed = rc_ratio(random_matrix(400, 3, 3), mixed_labels);
  CHECK(std::abs(mixed[0].r - 1.0) < 0.1);
  CHECK(std::abs(mixed[1].r - 1.0) < 0.1);

  auto singleton = rc_ratio(random_matrix(3, 2, 1), std::vector<int>{0, 0, 1});
  CHECK(singleton[1].flag == "too_few_members");

  double prev = 0.0;
  for (double gap : {0.0, 1.0, 2.0, 4.0, 8.0}) {
    std::vector<int> l;
    Matrix b = blobs(50, 2, gap, 1.0, 7, l);
    const double v = rc_ratio(b, l)[0].r;
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("energy spectrum and effective rank") {
  Vector a = random_matrix(30, 1, 1).col(0), bvec = random_matrix(5, 1, 2).col(0);
  Matrix rank1 = a * bvec.transpose();
  CHECK(effective_rank(rank1) == 1);
  CHECK(effective_rank(Matrix::Ones(5, 3)) == 0);

  Matrix iso = random_matrix(10000, 10, 3);
  CHECK(effective_rank(iso, 0.9) == 9);
  Vector ev = energy_spectrum(iso);
  for (Index i = 1; i < ev.size(); ++i) CHECK(ev(i) <= ev(i - 1));
  CHECK(ev.sum() == doctest::Approx(10.0).epsilon(0.05));
  CHECK(effective_rank(iso, 1.0) == 10);
}

TEST_CASE("local views keep more principal dimensions than global views") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthSpec spec;
    spec.n_blocks = 4;
    spec.p_in = 0.1;
    spec.p_out = 0.02;
    spec.seed = seed;
    Dataset d = synth_sbm(spec);
    REQUIRE(d.graph.n_components() == 1);
    SpectralBasis b = spectral_basis(d.graph);
    std::vector<double> alphas{0.05, 1.0};
    EncoderBank bank = init_bank(16, 16, alphas, 20.0, seed);
    bank.encoders[1].W = bank.encoders[0].W;
    auto views = bank_forward(b, d.features, bank, Activation::identity);
    CHECK(effective_rank(views[0].Y) >= effective_rank(views[1].Y));

    Vector local = fourier_spread(b, views[0].Y), global = fourier_spread(b, views[1].Y);
    CHECK(global(0) / global.sum() > local(0) / local.sum());
  }
}

TEST_CASE("fourier spread") {
  Graph g = random_graph(15, 0.3, 6, true);
  SpectralBasis b = spectral_basis(g);
  Matrix smooth = b.eigenvectors.col(0) * random_matrix(1, 4, 1);
  Vector m = fourier_spread(b, smooth);
  CHECK(m.tail(14).cwiseAbs().maxCoeff() < 1e-12);
  Matrix y = random_matrix(15, 4, 2);
  CHECK(std::abs(fourier_spread(b, y).squaredNorm() - y.squaredNorm()) < 1e-9);
}

TEST_CASE("mean pooling readout") {
  Matrix y = random_matrix(6, 3, 1);
  Matrix one = mean_pool_readout(y, std::vector<Index>(6, 0));
  CHECK((one.row(0) - y.colwise().mean()).cwiseAbs().maxCoeff() < 1e-15);

  Matrix twice(6, 3);
  twice.topRows(3) = y.topRows(3);
  twice.bottomRows(3) = y.topRows(3).colwise().reverse();
  Matrix pooled = mean_pool_readout(twice, std::vector<Index>{0, 0, 0, 1, 1, 1});
  CHECK((pooled.row(0) - pooled.row(1)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(mean_pool_readout(y, std::vector<Index>{0, 0, 2, 2, 2, 2}), ValidationError);
  CHECK_THROWS_AS(mean_pool_readout(y, std::vector<Index>{0, 0}), ValidationError);
}

TEST_CASE("skip expansion coefficients") {
  const double alpha = 0.1, lambda = 1.3;
  auto a = [&](int j) { return ml_asymptotic_coefficient(alpha, lambda, j); };
  Vector b1 = skip_expansion_coefficients(alpha, lambda, 1, 4);
  for (int j = 1; j <= 4; ++j) CHECK(b1(j - 1) == doctest::Approx(a(j)).epsilon(1e-14));
  // e + e^2 expanded by hand.
  Vector b2 = skip_expansion_coefficients(alpha, lambda, 2, 3);
  CHECK(b2(0) == doctest::Approx(a(1)).epsilon(1e-14));
  CHECK(b2(1) == doctest::Approx(a(2) + a(1) * a(1)).epsilon(1e-14));
  CHECK(b2(2) == doctest::Approx(a(3) + 2 * a(1) * a(2)).epsilon(1e-14));
  // The first coefficient never depends on m.
  CHECK(skip_expansion_coefficients(alpha, lambda, 4, 1)(0) == doctest::Approx(a(1)).epsilon(1e-14));
  const double ratio = skip_expansion_coefficients(0.1, lambda, 4, 1)(0) / skip_expansion_coefficients(0.9, lambda, 4, 1)(0);
  CHECK(ratio == doctest::Approx(fdmv::gamma(0.1) / fdmv::gamma(0.9)).epsilon(1e-13));
  CHECK(ratio > 1.0);
}

TEST_CASE("large-time spectral theorem check") {
  Graph dense = random_graph(20, 0.9, 1, true);
  SpectralBasis b = spectral_basis(dense);
  Vector x = random_matrix(20, 1, 2).col(0);

  SpectralReport alt = check_theorem_sgi(b, x, 0.1, 0.9, 1e3, 4);
  CHECK(alt.local.order == 9);
  CHECK(alt.global.order == 1);
  CHECK(alt.local.exact(0) == 5.0);
  CHECK(alt.global.exact(0) == 5.0);
  CHECK(alt.local.asymptotic(0) == 5.0);
  CHECK(std::isnan(alt.local.b(0, 0)));
  for (Index i = 1; i < 20; ++i) {
    CHECK(alt.local.b(i, 0) == doctest::Approx(1.0 / (b.eigenvalues(i) * fdmv::gamma(0.9))).epsilon(1e-13));
    CHECK(alt.local.b(i, 0) > alt.global.b(i, 0));
  }
  // With alternating signs the odd terms j = 3, 5, ... of the geometric sum turn negative.
  CHECK(alt.local.b(1, 2) < 0.0);
  CHECK_FALSE(alt.positivity);
  CHECK_FALSE(alt.monotone);
  CHECK(alt.ordering);
  CHECK(alt.agreement);
  CHECK(alt.max_relative_error < 0.1);

  SpectralReport pos = check_theorem_sgi(b, x, 0.1, 0.9, 1e3, 4, AsymptoticSign::all_positive);
  CHECK(pos.positivity);
  CHECK(pos.monotone);
  CHECK(pos.ordering);
  CHECK_FALSE(pos.agreement);

  for (Index i = 0; i < 20; ++i)
    CHECK(alt.local.output_coefficients(i) == doctest::Approx(std::abs(alt.local.exact(i) * gft(b, x)(i))));

  Graph split = build_graph(4, std::vector<Edge>{{0, 1, 1.0}, {2, 3, 1.0}});
  CHECK_THROWS_AS(check_theorem_sgi(spectral_basis(split), Vector::Ones(4), 0.1, 0.9, 1e3, 4), ValidationError);
  CHECK_THROWS_AS(check_theorem_sgi(b, x, 0.9, 0.1, 1e3, 4), ValidationError);
}

TEST_CASE("stability harness") {
  Graph g = random_graph(16, 0.3, 3, true);
  SpectralBasis b = spectral_basis(g);
  Matrix y0 = random_matrix(16, 2, 4);
  std::vector<double> times{1, 2, 5, 10, 20, 50};
  const double eps = 1e-3;

  for (double alpha : {0.3, 0.6, 1.0}) {
    std::vector<Channel> ch{{alpha, 1.0}};
    for (Index i : {Index{0}, Index{5}, Index{15}}) {
      Matrix dir = Matrix::Zero(16, 2);
      dir.col(1) = b.eigenvectors.col(i);
      StabilityCurve c = stability_init_state(b, y0, dir, eps, ch, times);
      for (std::size_t k = 0; k < times.size(); ++k) {
        const double expected = eps * ml(alpha, b.eigenvalues(i), times[k]);
        CHECK(std::abs(c.discrepancy[k] - expected) < 1e-8);
        if (i == 0) CHECK(std::abs(c.discrepancy[k] - eps) < 1e-12);
        if (alpha == 1.0) CHECK(std::abs(c.discrepancy[k] - eps * std::exp(-b.eigenvalues(i) * times[k])) < 1e-12);
      }
    }
    Matrix dir = random_matrix(16, 2, 5);
    StabilityCurve once = stability_init_state(b, y0, dir, eps, ch, times);
    StabilityCurve twice = stability_init_state(b, y0, dir, 2 * eps, ch, times);
    for (std::size_t k = 0; k < times.size(); ++k)
      CHECK(std::abs(twice.discrepancy[k] - 2 * once.discrepancy[k]) <= 1e-12 * twice.discrepancy[k]);
    CHECK(once.fitted_C == doctest::Approx(once.discrepancy[0] / eps));
    CHECK(once.bound[0] == doctest::Approx(once.discrepancy[0]));
    if (alpha == 1.0) CHECK(once.bound_holds);
  }

  std::vector<Channel> bank{{0.2, 0.3}, {0.9, 0.7}};
  Matrix x = random_matrix(16, 3, 6), w = random_matrix(3, 2, 7), dw = 1e-3 * random_matrix(3, 2, 8);
  StabilityCurve weights = stability_weights(b, x, w, dw, bank, times);
  CHECK(weights.epsilon == doctest::Approx((x * dw).norm()));
  CHECK(weights.bound_alpha == 0.9);
  Matrix s1 = solve_linear_spectral(b, x * dw, 0.2, 5.0), s2 = solve_linear_spectral(b, x * dw, 0.9, 5.0);
  CHECK(weights.discrepancy[2] == doctest::Approx((0.3 * s1 + 0.7 * s2).norm()).epsilon(1e-10));

  StabilityCurve topo = stability_topology(g, y0, 0.1, PerturbMode::add, 3, bank, times);
  CHECK(topo.epsilon > 0.0);
  CHECK(topo.discrepancy.size() == times.size());

  std::vector<double> bad_times{2.0, 1.0};
  std::vector<Channel> one{{0.5, 1.0}};
  CHECK_THROWS_AS(stability_init_state(b, y0, y0, eps, one, bad_times), ValidationError);
  CHECK_THROWS_AS(stability_init_state(b, y0, Matrix::Zero(16, 2), eps, one, times), ValidationError);
}
