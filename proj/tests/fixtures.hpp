#pragma once

// Small labelled datasets shared by the unit tests and the acceptance binary.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "genreforge/dataset.hpp"
#include "genreforge/temporal.hpp"

namespace fixture {

/// Dataset over the first `x.cols()` content components.
inline genreforge::LabeledDataset labelled(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                           std::size_t n_classes) {
  genreforge::LabeledDataset d;
  std::vector<char> keep(genreforge::content_schema().size(), 0);
  for (Eigen::Index c = 0; c < x.cols(); ++c) keep[static_cast<std::size_t>(c)] = 1;
  const std::unique_ptr<bool[]> mask(new bool[keep.size()]);
  for (std::size_t i = 0; i < keep.size(); ++i) mask[i] = keep[i] != 0;
  d.schema = genreforge::content_schema().project({mask.get(), keep.size()});
  d.features = x;
  d.labels = labels;
  for (std::size_t c = 0; c < n_classes; ++c) d.class_names.push_back("class_" + std::to_string(c));
  for (std::size_t i = 0; i < labels.size(); ++i) d.track_ids.push_back("t" + std::to_string(i));
  return d;
}

/// Two Gaussian blobs in 2-D, centres 6 apart, sd 0.5.
inline genreforge::LabeledDataset blobs(std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.5);
  Eigen::MatrixXd x(2 * per_class, 2);
  std::vector<int> y;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int c = i < per_class ? 0 : 1;
    const double centre = c == 0 ? -3.0 : 3.0;
    x(static_cast<Eigen::Index>(i), 0) = centre + n(rng);
    x(static_cast<Eigen::Index>(i), 1) = centre + n(rng);
    y.push_back(c);
  }
  return labelled(x, y, 2);
}

inline genreforge::LabeledDataset xor4() {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 1, 1, 0, 1, 1, 0;
  return labelled(x, {0, 0, 1, 1}, 2);
}

/// Concentric rings of radius 1 and 3 with small radial jitter.
inline genreforge::LabeledDataset rings(std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> jitter(0.0, 0.1);
  Eigen::MatrixXd x(2 * per_class, 2);
  std::vector<int> y;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int c = i % 2 == 0 ? 0 : 1;
    const double r = (c == 0 ? 1.0 : 3.0) + jitter(rng);
    const double a = angle(rng);
    x(static_cast<Eigen::Index>(i), 0) = r * std::cos(a);
    x(static_cast<Eigen::Index>(i), 1) = r * std::sin(a);
    y.push_back(c);
  }
  return labelled(x, y, 2);
}

}  // namespace fixture
