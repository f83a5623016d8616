#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "genreforge/temporal.hpp"

namespace genreforge {

/// Feature matrix (one row per track) with integer labels indexing `class_names`.
struct LabeledDataset {
  FeatureSchema schema;
  Eigen::MatrixXd features;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::vector<std::string> track_ids;

  std::size_t n_samples() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t n_features() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t n_classes() const { return class_names.size(); }

  std::vector<std::size_t> class_counts() const;

  /// Rows in the given order; class list and schema unchanged.
  LabeledDataset subset(std::span<const std::size_t> rows) const;
  LabeledDataset select_columns(std::span<const bool> keep) const;

  /// Throws SchemaMismatch / DegenerateDataset on inconsistent shapes or labels.
  void validate() const;
};

/// Builds a dataset from per-track vectors; classes are sorted by name.
LabeledDataset make_dataset(const std::vector<FeatureVector>& vectors, FeatureSchema schema);

/// Column-wise concatenation of two datasets over the same tracks.
LabeledDataset hconcat(const LabeledDataset& left, const LabeledDataset& right);

// Feature CSV: header = component names, then "track_id","label"; one row per track.
void write_feature_csv(const std::filesystem::path& path, const LabeledDataset& data);
LabeledDataset read_feature_csv(const std::filesystem::path& path);

FeatureSchema parse_schema(std::span<const std::string> names);

/// %.17g text, round-trips doubles exactly.
std::string format_double(double v);

}  // namespace genreforge
