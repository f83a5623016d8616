#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "genreforge/error.hpp"
#include "genreforge/svm.hpp"

using namespace genreforge;

namespace {

double training_accuracy(const SvmModel& m, const LabeledDataset& d) {
  const auto pred = m.predict(d.features);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == d.labels[i];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

bool duals_in_box(const SvmModel& m) {
  for (const auto& p : m.pairs) {
    for (Eigen::Index i = 0; i < p.alphas.size(); ++i) {
      if (p.alphas(i) < 0.0 || p.alphas(i) > m.C) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("kernels") {
  const std::vector<double> a = {0, 0, 0}, b = {8, 0, 0}, c = {1, 2, 3};
  CHECK(kernel_eval({KernelKind::Linear, 0}, c, c) == 14.0);
  CHECK(kernel_eval({KernelKind::Rbf, 1.0 / 64.0}, a, b) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(kernel_eval({KernelKind::Rbf, 0.5}, c, c) == 1.0);
  CHECK_THROWS_AS(kernel_eval({KernelKind::Linear, 0}, a, std::vector<double>{1.0}), Error);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  Eigen::MatrixXd x(15, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  const auto k = gram_matrix({KernelKind::Rbf, 0.3}, x);
  CHECK(k == k.transpose());
  CHECK((k.diagonal().array() == 1.0).all());
  const auto lin = gram_matrix({KernelKind::Linear, 0}, x);
  CHECK((lin - x * x.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  const auto d2 = squared_distances(x);
  CHECK(d2 == d2.transpose());
  CHECK(d2.diagonal().isZero(0.0));
}

TEST_CASE("separable fixtures reach full training accuracy") {
  SUBCASE("blobs with a linear kernel") {
    SvmConfig cfg;
    cfg.kernel = {KernelKind::Linear, 0};
    cfg.C = 1.0;
    const auto d = fixture::blobs(40, 3);
    const auto m = train_svm(d, cfg);
    CHECK(training_accuracy(m, d) == 1.0);
    CHECK(duals_in_box(m));
  }
  SUBCASE("xor with an rbf kernel") {
    SvmConfig cfg;
    cfg.kernel = {KernelKind::Rbf, 1.0};
    cfg.C = 10.0;
    const auto d = fixture::xor4();
    const auto m = train_svm(d, cfg);
    CHECK(training_accuracy(m, d) == 1.0);
    CHECK(duals_in_box(m));
  }
}

TEST_CASE("smo satisfies the dual constraints") {
  const auto d = fixture::rings(30, 1);
  std::vector<int> y;
  for (int l : d.labels) y.push_back(l == 0 ? 1 : -1);
  const auto k = gram_matrix({KernelKind::Rbf, 0.5}, d.features);
  const auto sol = solve_smo(k, y, 2.0, 1e-3, 10);
  CHECK(sol.converged);
  double balance = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(sol.alpha[i] >= 0.0);
    CHECK(sol.alpha[i] <= 2.0);
    balance += sol.alpha[i] * y[i];
  }
  CHECK(std::abs(balance) < 1e-9);
  const std::vector<int> one_sign(4, 1);
  CHECK_THROWS_AS(solve_smo(Eigen::MatrixXd::Identity(4, 4), one_sign, 1.0, 1e-3, 10), Error);
}

TEST_CASE("one-vs-one voting") {
  const std::size_t classes = 10;
  Eigen::MatrixXd x(classes * 3, 2);
  std::vector<int> y;
  for (std::size_t c = 0; c < classes; ++c) {
    for (int r = 0; r < 3; ++r) {
      const auto i = static_cast<Eigen::Index>(c * 3 + r);
      x(i, 0) = 10.0 * std::cos(0.6 * c) + 0.1 * r;
      x(i, 1) = 10.0 * std::sin(0.6 * c);
      y.push_back(static_cast<int>(c));
    }
  }
  const auto d = fixture::labelled(x, y, classes);
  SvmConfig cfg;
  cfg.kernel = {KernelKind::Rbf, 0.5};
  const auto m = train_svm(d, cfg);
  CHECK(m.pairs.size() == 45);
  const std::vector<double> probe = {x(4, 0), x(4, 1)};
  const auto v = m.votes(probe);
  int total = 0;
  for (int c : v) total += c;
  CHECK(total == 45);
  CHECK(m.predict(probe) == 1);
  CHECK(training_accuracy(m, d) == 1.0);
}

TEST_CASE("degenerate inputs") {
  SUBCASE("identical points in both classes") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(6, 2);
    const auto d = fixture::labelled(x, {0, 0, 0, 1, 1, 1}, 2);
    SvmConfig cfg;
    const auto m = train_svm(d, cfg);
    const auto p = m.predict(d.features);
    CHECK(p.size() == 6);
    CHECK(duals_in_box(m));
  }
  SUBCASE("a single class") {
    const auto d = fixture::labelled(Eigen::MatrixXd::Random(4, 2), {0, 0, 0, 0}, 1);
    std::vector<int> y(4, 1);
    try {
      train_binary(d.features, y, SvmConfig{});
      FAIL("single class accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SingleClass);
    }
  }
}

TEST_CASE("grid search") {
  SUBCASE("standard grid contains the reference optimum") {
    const auto g = SvmGrid::standard();
    CHECK(g.c_values.size() == 9);
    CHECK(g.gamma_values.size() == 9);
    CHECK(std::find(g.c_values.begin(), g.c_values.end(), 4.0) != g.c_values.end());
    CHECK(std::find(g.gamma_values.begin(), g.gamma_values.end(), std::ldexp(1.0, -6)) != g.gamma_values.end());
  }
  SUBCASE("rings prefer an rbf kernel") {
    const auto d = fixture::rings(30, 4);
    auto grid = SvmGrid::standard();
    grid.folds = 5;
    const auto r = grid_search_cv(d, grid, 9);
    CHECK(r.best.kernel.kind == KernelKind::Rbf);
    CHECK(r.best_accuracy > 0.95);
    CHECK(r.table.size() == 9 + 81);
    const auto again = grid_search_cv(d, grid, 9, 3);
    CHECK(again.best.C == r.best.C);
    CHECK(again.best.kernel.gamma == r.best.kernel.gamma);
    for (std::size_t i = 0; i < r.table.size(); ++i) {
      CHECK(again.table[i].fold_accuracy == r.table[i].fold_accuracy);
    }
  }
  SUBCASE("a single grid point is returned as is") {
    SvmGrid grid;
    grid.kernels = {KernelKind::Linear};
    grid.c_values = {2.0};
    grid.gamma_values = {1.0};
    grid.folds = 2;
    const auto r = grid_search_cv(fixture::blobs(6, 1), grid, 1);
    CHECK(r.table.size() == 1);
    CHECK(r.best.C == 2.0);
    CHECK(r.best.kernel.kind == KernelKind::Linear);
  }
  SUBCASE("too few samples per class for the folds") {
    auto grid = SvmGrid::standard();
    try {
      grid_search_cv(fixture::blobs(5, 1), grid, 1);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TooFewSamples);
    }
  }
  SUBCASE("tie-break order") {
    SvmConfig lin, rbf_small, rbf_big, big_c;
    lin.kernel = {KernelKind::Linear, 0};
    lin.C = 1;
    rbf_small.kernel = {KernelKind::Rbf, 0.25};
    rbf_small.C = 1;
    rbf_big.kernel = {KernelKind::Rbf, 0.5};
    rbf_big.C = 1;
    big_c.kernel = {KernelKind::Linear, 0};
    big_c.C = 2;
    CHECK(prefer_on_tie(lin, rbf_small));
    CHECK(prefer_on_tie(rbf_small, rbf_big));
    CHECK(prefer_on_tie(rbf_big, big_c));
    CHECK_FALSE(prefer_on_tie(big_c, lin));
  }
}

TEST_CASE("stratified folds") {
  const std::vector<int> labels = {0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 2, 2};
  const auto f = stratified_folds(labels, 3, 2, 5);
  REQUIRE(f.size() == labels.size());
  std::vector<std::array<int, 3>> per_fold(2, {0, 0, 0});
  for (std::size_t i = 0; i < f.size(); ++i) ++per_fold[f[i]][static_cast<std::size_t>(labels[i])];
  CHECK(per_fold[0] == std::array<int, 3>{2, 3, 1});
  CHECK(per_fold[1] == std::array<int, 3>{2, 3, 1});
  CHECK(stratified_folds(labels, 3, 2, 5) == f);
}

TEST_CASE("model persistence") {
  SvmConfig cfg;
  cfg.kernel = {KernelKind::Rbf, 0.125};
  const auto d = fixture::rings(15, 2);
  const auto m = train_svm(d, cfg);
  const auto p = std::filesystem::temp_directory_path() / "genreforge_svm.json";
  save_svm(p, m);
  const auto back = load_svm(p);
  CHECK(back.predict(d.features) == m.predict(d.features));
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
    const std::vector<double> row = {d.features(i, 0), d.features(i, 1)};
    CHECK(back.pairs[0].decision(back.kernel, row) == m.pairs[0].decision(m.kernel, row));
  }
}
