#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "genreforge/autoencoder.hpp"
#include "genreforge/error.hpp"
#include "oracles.hpp"

using namespace genreforge;

namespace {

AutoencoderConfig tiny(std::size_t in, std::size_t hidden, std::size_t code, double dropout, std::uint64_t seed) {
  auto cfg = AutoencoderConfig::standard(in, hidden, code, dropout);
  cfg.rng_seed = seed;
  return cfg;
}

Eigen::MatrixXd random_unit(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

}  // namespace

TEST_CASE("he initialisation") {
  std::mt19937_64 rng(1);
  const auto normal = he_init({60, 2000, Activation::PReLU, 0.0, Init::HeNormal}, rng);
  const double n = static_cast<double>(normal.weights.size());
  const double mean = normal.weights.sum() / n;
  const double sd = std::sqrt((normal.weights.array() - mean).square().sum() / n);
  CHECK(std::abs(sd - std::sqrt(2.0 / 60.0)) <= 0.02 * std::sqrt(2.0 / 60.0));
  CHECK(normal.bias.isZero(0.0));
  CHECK((normal.slopes.array() == 0.25).all());

  const auto uniform = he_init({20, 500, Activation::Sigmoid, 0.0, Init::HeUniform}, rng);
  CHECK(uniform.weights.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 20.0));
}

TEST_CASE("forward pass") {
  auto model = init_autoencoder(tiny(8, 6, 3, 0.2, 4));
  SUBCASE("zero parameters give 0.5 outputs and a zero code") {
    for (auto& l : model.mutable_layers()) {
      l.weights.setZero();
      l.bias.setZero();
    }
    const auto r = forward(model, random_unit(8, 2, 1), Mode::Eval);
    CHECK((r.reconstruction.array() == 0.5).all());
    CHECK(r.code.isZero(0.0));
  }
  SUBCASE("eval mode is pure and matches the scalar oracle") {
    const auto x = random_unit(8, 4, 2);
    const auto a = forward(model, x, Mode::Eval);
    const auto b = forward(model, x, Mode::Eval);
    CHECK(a.reconstruction == b.reconstruction);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const std::vector<double> col(x.col(c).data(), x.col(c).data() + x.rows());
      const auto ref = oracle::forward(model, col);
      for (std::size_t i = 0; i < ref.size(); ++i) {
        CHECK(std::abs(a.reconstruction(static_cast<Eigen::Index>(i), c) - ref[i]) <= 1e-12);
      }
    }
    CHECK(a.code.rows() == 3);
    const auto code = encode(model, Eigen::MatrixXd(x.transpose()));
    CHECK((code.transpose() - a.code).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("train mode needs an rng and honours it") {
    const auto x = random_unit(8, 4, 3);
    CHECK_THROWS_AS(forward(model, x, Mode::Train), Error);
    std::mt19937_64 r1(5), r2(5);
    CHECK(forward(model, x, Mode::Train, &r1).reconstruction == forward(model, x, Mode::Train, &r2).reconstruction);
  }
  CHECK_THROWS_AS(forward(model, random_unit(7, 1, 1), Mode::Eval), Error);
}

TEST_CASE("binary cross-entropy") {
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(5, 2);
  CHECK(bce_loss(ones, ones) < 1e-6);
  CHECK(bce_loss(ones, Eigen::MatrixXd::Constant(5, 2, 0.5)) == doctest::Approx(std::log(2.0)));
  const auto x = random_unit(7, 3, 8), p = random_unit(7, 3, 9);
  double ref = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    ref -= x.data()[i] * std::log(p.data()[i]) + (1 - x.data()[i]) * std::log(1 - p.data()[i]);
  }
  CHECK(std::abs(bce_loss(x, p) - ref / 21.0) <= 1e-12);
}

TEST_CASE("backward pass") {
  SUBCASE("matches central differences") {
    auto model = init_autoencoder(tiny(6, 5, 3, 0.0, 12));
    const auto x = random_unit(6, 3, 13);
    const auto fwd = forward(model, x, Mode::Eval);
    const auto g = backward(model, fwd.cache, x);
    const auto check = oracle::gradient_check(model, x, g);
    CHECK(check.checked > 0);
    CHECK(check.max_rel_error < 1e-6);
  }
  SUBCASE("stale cache") {
    auto model = init_autoencoder(tiny(6, 5, 3, 0.0, 1));
    const auto x = random_unit(6, 2, 2);
    const auto fwd = forward(model, x, Mode::Eval);
    model.mutable_layers()[0].bias(0) += 0.1;
    try {
      backward(model, fwd.cache, x);
      FAIL("stale cache accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::StaleCache);
    }
  }
  SUBCASE("perfect reconstruction has zero output delta") {
    auto model = init_autoencoder(tiny(6, 5, 3, 0.0, 2));
    const auto x = random_unit(6, 2, 3);
    const auto fwd = forward(model, x, Mode::Eval);
    CHECK(output_delta(fwd.cache, fwd.reconstruction).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("an all-zero dropout mask blocks upstream gradients") {
    auto model = init_autoencoder(tiny(6, 5, 3, 0.5, 3));
    const auto x = random_unit(6, 1, 4);
    auto fwd = forward(model, x, Mode::Eval);
    fwd.cache.masks[1] = Eigen::MatrixXd::Zero(3, 1);
    const auto g = backward(model, fwd.cache, x);
    CHECK(g.weights[0].isZero(0.0));
    CHECK(g.weights[1].isZero(0.0));
    CHECK(g.bias[0].isZero(0.0));
  }
}

TEST_CASE("adadelta") {
  AdadeltaConfig cfg;
  std::vector<double> p = {0.0};
  AdadeltaAccumulators acc;
  adadelta_update(p, std::vector<double>{1.0}, acc, cfg);
  CHECK(p[0] == doctest::Approx(-std::sqrt(1e-8) / std::sqrt(0.05 + 1e-8)).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(-4.47e-4).epsilon(1e-3));

  std::vector<double> q = {1.5, -2.0};
  AdadeltaAccumulators acc2;
  adadelta_update(q, std::vector<double>{0.0, 0.0}, acc2, cfg);
  CHECK(q == std::vector<double>{1.5, -2.0});

  oracle::ScalarAdadelta ref;
  double theta = 0.3, expect = 0.3;
  std::vector<double> param = {theta};
  AdadeltaAccumulators acc3;
  for (int t = 0; t < 10; ++t) {
    const double g = std::sin(0.7 * t) + 0.1 * t;
    adadelta_update(param, std::vector<double>{g}, acc3, cfg);
    expect = ref.step(expect, g);
    CHECK(std::abs(param[0] - expect) <= 1e-12);
  }
}

TEST_CASE("training") {
  CHECK(batches_per_epoch(900, 32) == 29);
  CHECK(batches_per_epoch(64, 32) == 2);

  SUBCASE("loss falls and parameters stay finite") {
    auto cfg = tiny(12, 8, 4, 0.2, 7);
    cfg.epochs = 30;
    const auto x = random_unit(100, 12, 5);
    const auto model = train_autoencoder(x, cfg);
    REQUIRE(model.loss_history().size() == 30);
    CHECK(model.loss_history().back() < model.loss_history().front());
    for (const auto& l : model.layers()) {
      CHECK(l.weights.allFinite());
      CHECK(l.bias.allFinite());
      CHECK(l.slopes.allFinite());
    }
    const auto again = train_autoencoder(x, cfg);
    CHECK(again.loss_history() == model.loss_history());
  }
  SUBCASE("low-dimensional manifold is learned") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Eigen::Index d = 20, k = 3, n = 300;
    Eigen::MatrixXd basis(k, d);
    for (Eigen::Index i = 0; i < basis.size(); ++i) basis.data()[i] = u(rng);
    Eigen::MatrixXd coords(n, k);
    for (Eigen::Index i = 0; i < coords.size(); ++i) coords.data()[i] = u(rng);
    Eigen::MatrixXd x = coords * basis;
    x = (x.array() - x.minCoeff()) / (x.maxCoeff() - x.minCoeff());
    auto cfg = tiny(d, 12, 3, 0.0, 2);
    cfg.epochs = 200;
    const auto untrained = init_autoencoder(cfg);
    const auto model = train_autoencoder(x, cfg);
    const double before = (reconstruct(untrained, x) - x).squaredNorm();
    const double after = (reconstruct(model, x) - x).squaredNorm();
    CHECK(after < 0.1 * before);
  }
  SUBCASE("inputs outside [0,1] are rejected") {
    Eigen::MatrixXd x = random_unit(10, 12, 1);
    x(3, 3) = 1.5;
    try {
      train_autoencoder(x, tiny(12, 8, 4, 0.2, 1));
      FAIL("out-of-range input accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InputOutOfRange);
    }
  }
}

TEST_CASE("persistence round-trip") {
  auto cfg = tiny(10, 7, 4, 0.2, 9);
  cfg.epochs = 3;
  const auto x = random_unit(40, 10, 2);
  const auto model = train_autoencoder(x, cfg);
  const auto p = std::filesystem::temp_directory_path() / "genreforge_ae.gfae";
  save_autoencoder(p, model);
  const auto back = load_autoencoder(p);
  CHECK(encode(back, x) == encode(model, x));
  CHECK(back.loss_history() == model.loss_history());
  {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << "GFAE";
  }
  CHECK_THROWS_AS(load_autoencoder(p), Error);
}
