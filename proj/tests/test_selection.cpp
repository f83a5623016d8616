#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "genreforge/error.hpp"
#include "genreforge/selection.hpp"
#include "oracles.hpp"

using namespace genreforge;

namespace {

// One perfectly separating component (index 0) followed by uniform noise.
LabeledDataset separable(std::size_t n_noise, std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LabeledDataset d;
  for (std::size_t j = 0; j <= n_noise; ++j) d.schema.components.push_back({"f", Statistic::Mean, j});
  d.class_names = {"a", "b"};
  d.features.resize(static_cast<Eigen::Index>(2 * per_class), static_cast<Eigen::Index>(n_noise + 1));
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int label = i < per_class ? 0 : 1;
    const auto r = static_cast<Eigen::Index>(i);
    d.features(r, 0) = label + 0.5 * u(rng);
    for (std::size_t j = 1; j <= n_noise; ++j) d.features(r, static_cast<Eigen::Index>(j)) = u(rng);
    d.labels.push_back(label);
    d.track_ids.push_back("t" + std::to_string(i));
  }
  return d;
}

}  // namespace

TEST_CASE("entropy") {
  CHECK(entropy_of_labels(std::vector<int>{1, 1, 1}) == 0.0);
  CHECK(entropy_of_labels(std::vector<int>{0, 1}) == doctest::Approx(1.0));
  CHECK(entropy_of_labels(std::vector<int>{0, 1, 1, 1}) == doctest::Approx(0.8112781244591328).epsilon(1e-14));
  CHECK_THROWS_AS(entropy_of_labels(std::vector<int>{}), Error);

  for (std::size_t k = 2; k <= 6; ++k) {
    const std::vector<std::size_t> uniform(k, 5);
    CHECK(entropy(uniform) == doctest::Approx(std::log2(static_cast<double>(k))));
    std::vector<std::size_t> skewed(k, 5);
    skewed[0] = 6;
    CHECK(entropy(skewed) < entropy(uniform));
  }
}

TEST_CASE("split information gain") {
  CHECK(split_information_gain(std::vector<int>{0, 0, 1, 1}, {{0, 1}, {0, 1}}) == doctest::Approx(0.0));
  CHECK(split_information_gain(std::vector<int>{0, 0, 1, 1}, {{0, 0}, {1, 1}}) == doctest::Approx(1.0));
  CHECK(split_information_gain(std::vector<int>{0, 0, 0, 1}, {{0, 0}, {0, 1}}) ==
        doctest::Approx(0.8112781244591328 - 0.5).epsilon(1e-12));
  try {
    split_information_gain(std::vector<int>{0, 0, 1}, {{0}, {1}});
    FAIL("non-partition accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotAPartition);
  }

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> cls(0, 3);
    std::vector<int> parent(12);
    for (int& l : parent) l = cls(rng);
    std::vector<std::vector<int>> children(3);
    for (int l : parent) children[rng() % 3].push_back(l);
    const double ig = split_information_gain(parent, children);
    CHECK(ig >= -1e-15);
    CHECK(std::abs(ig - oracle::information_gain(parent, children)) <= 1e-12);
  }
}

TEST_CASE("best threshold split") {
  const auto s = best_threshold_split(std::vector<double>{1, 2, 9, 10}, std::vector<int>{0, 0, 1, 1}, 2);
  CHECK(s.valid);
  CHECK(s.threshold == 5.5);
  CHECK(s.information_gain == doctest::Approx(1.0));

  const auto c = best_threshold_split(std::vector<double>{3, 3, 3}, std::vector<int>{0, 1, 0}, 2);
  CHECK_FALSE(c.valid);
  CHECK(c.information_gain == 0.0);

  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(15);
    std::vector<int> labels(15);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = static_cast<double>(rng() % 8);
      labels[i] = static_cast<int>(rng() % 3);
    }
    const auto got = best_threshold_split(v, labels, 3);
    const auto ref = oracle::best_split(v, labels);
    CHECK(got.valid == ref.valid);
    CHECK(got.threshold == ref.threshold);
    CHECK(std::abs(got.information_gain - ref.gain) <= 1e-12);
  }
}

TEST_CASE("forest selection") {
  SUBCASE("separating component carries the most gain") {
    std::size_t wins = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const auto d = separable(5, 15, seed);
      ForestConfig cfg;
      cfg.n_trees = 50;
      cfg.rng_seed = seed;
      const auto r = train_forest(d, cfg).report;
      const auto best = std::max_element(r.cumulative_ig.begin(), r.cumulative_ig.end()) - r.cumulative_ig.begin();
      if (best == 0) ++wins;
    }
    CHECK(wins >= 99);
  }
  SUBCASE("deterministic and consistent") {
    const auto d = separable(6, 20, 3);
    ForestConfig cfg;
    cfg.n_trees = 40;
    const auto a = train_forest(d, cfg);
    cfg.jobs = 3;
    const auto b = train_forest(d, cfg);
    CHECK(a.report.cumulative_ig == b.report.cumulative_ig);
    std::size_t pop = 0;
    for (std::size_t j = 0; j < a.report.retained.size(); ++j) {
      CHECK(a.report.retained[j] == (a.report.cumulative_ig[j] > 0.0));
      pop += a.report.retained[j];
    }
    CHECK(pop == a.report.retained_count);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.n_samples(); ++i) {
      const Eigen::VectorXd row = d.features.row(static_cast<Eigen::Index>(i)).transpose();
      correct += a.forest.predict(std::span<const double>(row.data(), row.size())) == d.labels[i];
    }
    CHECK(correct == d.n_samples());
  }
  SUBCASE("unweighted gains are at least the weighted ones") {
    const auto d = separable(4, 20, 8);
    ForestConfig cfg;
    cfg.n_trees = 30;
    const auto w = train_forest(d, cfg).report;
    cfg.weighting = GainWeighting::Unweighted;
    const auto u = train_forest(d, cfg).report;
    for (std::size_t j = 0; j < w.cumulative_ig.size(); ++j) CHECK(u.cumulative_ig[j] >= w.cumulative_ig[j] - 1e-12);
  }
  SUBCASE("degenerate data") {
    auto d = separable(2, 5, 1);
    std::fill(d.labels.begin(), d.labels.end(), 0);
    try {
      train_forest(d, ForestConfig{});
      FAIL("single class accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateDataset);
    }
  }
}

TEST_CASE("applying and persisting a selection") {
  const auto r = make_report({"x.M.0", "x.M.1", "x.M.2"}, {0.4, 0.0, 1e-9});
  CHECK(r.retained_count == 2);
  FeatureVector v{{1.0, 2.0, 3.0}, "t", "a"};
  CHECK(apply_selection(v, r).values == std::vector<double>{1.0, 3.0});
  const auto all = make_report({"x.M.0", "x.M.1"}, {0.1, 0.2});
  FeatureVector w{{5.0, 6.0}, "t", "a"};
  CHECK(apply_selection(w, all).values == w.values);
  FeatureVector bad{{1.0}, "t", "a"};
  CHECK_THROWS_AS(apply_selection(bad, r), Error);

  const auto p = std::filesystem::temp_directory_path() / "genreforge_selection.csv";
  write_selection_csv(p, r);
  const auto back = read_selection_csv(p);
  CHECK(back.component_names == r.component_names);
  CHECK(back.cumulative_ig == r.cumulative_ig);
  CHECK(back.retained == r.retained);
}
