#pragma once

// Soft-margin SVM (SMO on a precomputed Gram matrix), one-vs-one multiclass,
// and stratified k-fold grid search.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "genreforge/dataset.hpp"

namespace genreforge {

enum class KernelKind { Linear, Rbf };

struct KernelSpec {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 1.0 / 64.0;  // rbf only
};

std::string to_string(const KernelSpec& k);

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

struct SvmConfig {
  KernelSpec kernel;
  double C = 4.0;
  double tolerance = 1e-3;
  std::size_t max_passes = 10;

  void validate() const;
};

/// Pairwise squared Euclidean distances between rows; exactly symmetric, zero diagonal.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x);

/// Gram matrix of the rows of `x`.
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& x);

/// rbf Gram from precomputed squared distances.
Eigen::MatrixXd rbf_from_distances(const Eigen::MatrixXd& sq_dist, double gamma);

struct BinarySolution {
  std::vector<double> alpha;  // in [0, C]
  double bias = 0.0;          // decision = sum alpha_i y_i K(x_i, x) + bias
  std::size_t iterations = 0;
  bool converged = false;
};

/// Dual soft-margin SVM by SMO with second-order working-set selection.
/// `y` holds +1 / -1; both signs must occur.
BinarySolution solve_smo(const Eigen::MatrixXd& gram, std::span<const int> y, double C,
                         double tolerance, std::size_t max_passes);

struct BinaryModel {
  int positive_class = 0;  // y = +1
  int negative_class = 1;  // y = -1
  Eigen::MatrixXd support_vectors;  // rows
  Eigen::VectorXd coefficients;     // alpha_i * y_i
  Eigen::VectorXd alphas;
  double bias = 0.0;

  double decision(const KernelSpec& kernel, std::span<const double> x) const;
};

/// Two-class problem; `y` holds +1 / -1. Throws SingleClass if one sign is missing.
BinaryModel train_binary(const Eigen::MatrixXd& x, std::span<const int> y, const SvmConfig& cfg);

struct SvmModel {
  std::vector<std::string> class_names;
  KernelSpec kernel;
  double C = 0.0;
  std::size_t dimension = 0;
  std::vector<BinaryModel> pairs;  // (i, j) for i < j in class order

  int predict(std::span<const double> x) const;
  std::vector<int> votes(std::span<const double> x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

SvmModel train_svm(const LabeledDataset& data, const SvmConfig& cfg, std::size_t jobs = 1);

struct SvmGrid {
  std::vector<KernelKind> kernels = {KernelKind::Linear, KernelKind::Rbf};
  std::vector<double> c_values;      // default 2^-2 .. 2^6
  std::vector<double> gamma_values;  // default 2^-8 .. 2^0
  std::size_t folds = 10;
  double tolerance = 1e-3;
  std::size_t max_passes = 10;

  static SvmGrid standard();
};

struct CvRow {
  KernelSpec kernel;
  double C = 0.0;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

struct GridSearchResult {
  SvmConfig best;
  double best_accuracy = 0.0;
  std::vector<CvRow> table;
};

/// Per class: shuffled indices dealt round-robin into `folds` folds.
std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t n_classes,
                                          std::size_t folds, std::uint64_t seed);

GridSearchResult grid_search_cv(const LabeledDataset& data, const SvmGrid& grid,
                                std::uint64_t seed, std::size_t jobs = 1);

/// Orders grid points for tie-breaking: smaller C, then linear before rbf, then smaller gamma.
bool prefer_on_tie(const SvmConfig& a, const SvmConfig& b);

void save_svm(const std::filesystem::path& path, const SvmModel& model);
SvmModel load_svm(const std::filesystem::path& path);

// CSV columns: kernel,C,gamma,fold_0..fold_{k-1},mean
void write_cv_table(const std::filesystem::path& path, const GridSearchResult& result);

}  // namespace genreforge
