#pragma once

// Information-gain feature selection through a random forest.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "genreforge/dataset.hpp"

namespace genreforge {

/// Shannon entropy (bits) of a class-count histogram; 0 log 0 := 0.
double entropy(std::span<const std::size_t> class_counts);

/// Entropy of a label multiset. Throws EmptySet for an empty multiset.
double entropy_of_labels(std::span<const int> labels);

/// H(parent) - sum |child|/|parent| H(child). Throws NotAPartition if the
/// children's label multisets do not add up to the parent's.
double split_information_gain(std::span<const int> parent,
                              const std::vector<std::vector<int>>& children);

/// IG of a binary split given per-class counts on each side.
double binary_split_gain(std::span<const std::size_t> left, std::span<const std::size_t> right);

struct ThresholdSplit {
  double threshold = 0.0;
  double information_gain = 0.0;
  bool valid = false;  // false when the attribute is constant
};

/// Two splits whose gains differ by at most this are treated as tied.
inline constexpr double kGainTieTolerance = 1e-12;

/// Best binary split `value <= threshold` over midpoints between consecutive
/// distinct values. Ties resolve to the smallest threshold.
ThresholdSplit best_threshold_split(std::span<const double> values, std::span<const int> labels,
                                    std::size_t n_classes);

enum class GainWeighting { NodeFraction, Unweighted };

struct ForestConfig {
  std::size_t n_trees = 500;
  std::size_t max_features_per_split = 0;  // 0: floor(sqrt(n_components))
  std::size_t max_depth = 0;               // 0: unlimited
  std::size_t min_samples_split = 2;
  std::uint64_t rng_seed = 1;
  GainWeighting weighting = GainWeighting::NodeFraction;
  std::size_t jobs = 1;
};

struct SelectionReport {
  std::vector<std::string> component_names;
  std::vector<double> cumulative_ig;  // bits
  std::vector<bool> retained;         // cumulative_ig > 0
  std::size_t retained_count = 0;

  std::vector<bool> mask() const { return retained; }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int majority_class = 0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  int predict(std::span<const double> x) const;
};

struct RandomForest {
  std::vector<DecisionTree> trees;
  std::size_t n_classes = 0;
  int predict(std::span<const double> x) const;
};

struct ForestResult {
  RandomForest forest;
  SelectionReport report;
};

ForestResult train_forest(const LabeledDataset& data, const ForestConfig& cfg);

/// Builds a report from accumulated gains (retained iff gain > 0).
SelectionReport make_report(std::vector<std::string> names, std::vector<double> gains);

FeatureVector apply_selection(const FeatureVector& vec, const SelectionReport& report);
LabeledDataset apply_selection(const LabeledDataset& data, const SelectionReport& report);

// CSV columns: component_name,cumulative_ig,retained
void write_selection_csv(const std::filesystem::path& path, const SelectionReport& report);
SelectionReport read_selection_csv(const std::filesystem::path& path);

}  // namespace genreforge
