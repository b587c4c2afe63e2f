#include <cmath>

#include "doctest.h"
#include "fdmv/encoder.hpp"
#include "fdmv/fde.hpp"
#include "test_support.hpp"

using namespace fdmv;
using fdmv::testing::random_graph;
using fdmv::testing::random_matrix;

TEST_CASE("encoder forward basics") {
  Graph g = random_graph(15, 0.3, 1, true);
  SpectralBasis b = spectral_basis(g);
  Matrix x = random_matrix(15, 4, 2);

  EncoderParams no_diffusion{Matrix::Identity(4, 4), 1.0, 1e-9};
  ViewEmbedding v = encoder_forward(b, x, no_diffusion, Activation::identity);
  CHECK((v.Y - x).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(v.source_alpha == 1.0);

  auto rng = derive_stream(5, "test");
  EncoderParams p{init_weights(4, 6, rng), 0.4, 3.0};
  CHECK(encoder_forward(b, x, p).Y == encoder_forward(b, x, p).Y);
  CHECK((encoder_forward(b, x, p).Y.array() >= 0.0).all());

  // Pure frequency-0 input passes through diffusion unchanged.
  Vector w = random_matrix(4, 1, 3).col(0);
  Matrix x0 = b.eigenvectors.col(0) * w.transpose();
  for (double alpha : {0.05, 0.5, 1.0}) {
    p.alpha = alpha;
    ViewEmbedding y = encoder_forward(b, x0, p, Activation::identity);
    CHECK((y.Y - x0 * p.W).cwiseAbs().maxCoeff() < 1e-12);
  }

  CHECK_THROWS_AS(encoder_forward(b, random_matrix(15, 3, 1), p), ValidationError);
  CHECK_THROWS_AS(encoder_forward(b, random_matrix(14, 4, 1), p), ValidationError);
  p.alpha = 1.3;
  CHECK_THROWS_AS(encoder_forward(b, x, p), ValidationError);
}

TEST_CASE("pre-activation output is linear in the features") {
  Graph g = random_graph(20, 0.2, 4, true);
  SpectralBasis b = spectral_basis(g);
  auto rng = derive_stream(1, "test");
  EncoderParams p{init_weights(5, 7, rng), 0.3, 10.0};
  Matrix x1 = random_matrix(20, 5, 11), x2 = random_matrix(20, 5, 12);
  const double a = 1.7, c = -0.4;
  Matrix lhs = encoder_forward(b, a * x1 + c * x2, p, Activation::identity).Y;
  Matrix rhs = a * encoder_forward(b, x1, p, Activation::identity).Y + c * encoder_forward(b, x2, p, Activation::identity).Y;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("per-frequency energy ratio is non-increasing") {
  Graph g = random_graph(25, 0.2, 8, true);
  SpectralBasis b = spectral_basis(g);
  Matrix x = random_matrix(25, 6, 9);
  EncoderParams p{Matrix::Identity(6, 6), 0.5, 5.0};
  Matrix in = gft(b, x), out = gft(b, encoder_forward(b, x, p, Activation::identity).Y);
  double prev = 1.0 + 1e-12;
  for (Index i = 0; i < 25; ++i) {
    const double ratio = out.row(i).norm() / in.row(i).norm();
    CHECK(ratio <= prev + 1e-12);
    prev = ratio;
  }
}

TEST_CASE("local and global views are distinct") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Graph g = random_graph(30, 0.15, seed, true);
    SpectralBasis b = spectral_basis(g);
    Matrix x = random_matrix(30, 8, seed + 50);
    std::vector<double> alphas{1.0, 0.01};
    EncoderBank bank = init_bank(8, 8, alphas, 20.0, seed);
    CHECK(bank.encoders[0].alpha == 0.01);
    bank.encoders[1].W = bank.encoders[0].W;
    auto views = bank_forward(b, x, bank, Activation::identity);
    const double dist = (views[0].Y - views[1].Y).norm() / views[0].Y.norm();
    CHECK(dist > 0.1);
  }
}

TEST_CASE("bank initialization and forward") {
  std::vector<double> alphas{0.9, 0.1, 0.5};
  EncoderBank bank = init_bank(4, 6, alphas, 2.0, 42);
  CHECK(bank.alphas() == std::vector<double>{0.1, 0.5, 0.9});
  for (const auto& e : bank.encoders) {
    CHECK(e.W.rows() == 4);
    CHECK(e.W.cols() == 6);
    CHECK(e.W.cwiseAbs().maxCoeff() <= 0.5);
  }
  CHECK(init_bank(4, 6, alphas, 2.0, 42).encoders[2].W == bank.encoders[2].W);
  CHECK_FALSE(init_bank(4, 6, alphas, 2.0, 43).encoders[2].W == bank.encoders[2].W);
  CHECK_FALSE(init_bank(4, 6, alphas, 2.0, 42, 1).encoders[2].W == bank.encoders[2].W);
  CHECK(hidden_dim(8, 4) == 8);
  CHECK(hidden_dim(4, 16) == 16);

  std::vector<double> one{0.5};
  CHECK_THROWS_AS(init_bank(4, 6, one, 2.0, 1), ValidationError);
  EncoderBank empty;
  Graph g = random_graph(10, 0.3, 2, true);
  SpectralBasis b = spectral_basis(g);
  Matrix x = random_matrix(10, 4, 3);
  CHECK_THROWS_AS(bank_forward(b, x, empty), ValidationError);

  auto serial = bank_forward(b, x, bank, Activation::relu, 1);
  auto parallel = bank_forward(b, x, bank, Activation::relu, 3);
  REQUIRE(serial.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(serial[k].Y == parallel[k].Y);
    CHECK(serial[k].Y == encoder_forward(b, x, bank.encoders[k]).Y);
    CHECK(serial[k].source_alpha == bank.encoders[k].alpha);
  }
}

TEST_CASE("combine_views") {
  std::vector<ViewEmbedding> views{{random_matrix(5, 3, 1), 0.1}, {random_matrix(5, 3, 2), 0.9}};
  std::vector<double> one_hot{0.0, 1.0};
  CHECK(combine_views(views, one_hot) == views[1].Y);
  std::vector<double> half{0.5, 0.5};
  CHECK((combine_views(views, half) - 0.5 * (views[0].Y + views[1].Y)).cwiseAbs().maxCoeff() < 1e-15);
  std::vector<ViewEmbedding> same{views[0], views[0]};
  std::vector<double> skew{0.3, 0.7};
  CHECK((combine_views(same, skew) - views[0].Y).cwiseAbs().maxCoeff() < 1e-15);

  std::vector<double> bad_sum{0.5, 0.6};
  CHECK_THROWS_AS(combine_views(views, bad_sum), ValidationError);
  std::vector<double> negative{1.5, -0.5};
  CHECK_THROWS_AS(combine_views(views, negative), ValidationError);
  std::vector<double> wrong_len{1.0};
  CHECK_THROWS_AS(combine_views(views, wrong_len), ValidationError);
}
