#include "genreforge/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>

#include "genreforge/error.hpp"
#include "genreforge/parallel.hpp"

namespace genreforge {

double entropy(std::span<const std::size_t> class_counts) {
  const std::size_t n = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
  if (n == 0) return 0.0;
  double h = 0.0;
  for (std::size_t c : class_counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log2(p);
  }
  return h;
}

namespace {

std::vector<std::size_t> count_labels(std::span<const int> labels, std::size_t n_classes) {
  std::vector<std::size_t> counts(n_classes, 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

std::size_t label_range(std::span<const int> labels) {
  int hi = -1;
  for (int l : labels) {
    if (l < 0) fail(ErrorCode::DegenerateDataset, "negative class label");
    hi = std::max(hi, l);
  }
  return static_cast<std::size_t>(hi + 1);
}

}  // namespace

double entropy_of_labels(std::span<const int> labels) {
  if (labels.empty()) fail(ErrorCode::EmptySet, "entropy of an empty set");
  return entropy(count_labels(labels, label_range(labels)));
}

double split_information_gain(std::span<const int> parent,
                              const std::vector<std::vector<int>>& children) {
  if (parent.empty()) fail(ErrorCode::EmptySet, "split of an empty set");
  std::size_t k = label_range(parent);
  for (const auto& c : children) k = std::max(k, label_range(c));

  const auto parent_counts = count_labels(parent, k);
  std::vector<std::size_t> merged(k, 0);
  for (const auto& c : children) {
    const auto cc = count_labels(c, k);
    for (std::size_t i = 0; i < k; ++i) merged[i] += cc[i];
  }
  if (merged != parent_counts) fail(ErrorCode::NotAPartition, "children do not partition parent");

  const double n = static_cast<double>(parent.size());
  double gain = entropy(parent_counts);
  for (const auto& c : children) {
    if (c.empty()) continue;
    gain -= static_cast<double>(c.size()) / n * entropy(count_labels(c, k));
  }
  return gain;
}

double binary_split_gain(std::span<const std::size_t> left, std::span<const std::size_t> right) {
  std::vector<std::size_t> parent(left.size());
  std::size_t nl = 0, nr = 0;
  for (std::size_t i = 0; i < left.size(); ++i) {
    parent[i] = left[i] + right[i];
    nl += left[i];
    nr += right[i];
  }
  const double n = static_cast<double>(nl + nr);
  if (n == 0.0) return 0.0;
  return entropy(parent) - static_cast<double>(nl) / n * entropy(left) -
         static_cast<double>(nr) / n * entropy(right);
}

namespace {

// Scans sorted (value, label) pairs. `order` indexes into values/labels.
ThresholdSplit scan_sorted(std::span<const double> values, std::span<const int> labels,
                           std::span<const std::size_t> order, std::size_t n_classes,
                           std::vector<std::size_t>& left, std::vector<std::size_t>& right) {
  ThresholdSplit best;
  std::fill(left.begin(), left.end(), 0);
  std::fill(right.begin(), right.end(), 0);
  for (std::size_t i : order) ++right[static_cast<std::size_t>(labels[i])];
  (void)n_classes;

  for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
    const int l = labels[order[pos]];
    ++left[static_cast<std::size_t>(l)];
    --right[static_cast<std::size_t>(l)];
    const double a = values[order[pos]];
    const double b = values[order[pos + 1]];
    if (!(a < b)) continue;
    const double gain = binary_split_gain(left, right);
    if (!best.valid || gain > best.information_gain + kGainTieTolerance) {
      double mid = 0.5 * (a + b);
      if (!(mid < b)) mid = a;
      best.threshold = mid;
      best.information_gain = gain;
      best.valid = true;
    }
  }
  return best;
}

}  // namespace

ThresholdSplit best_threshold_split(std::span<const double> values, std::span<const int> labels,
                                    std::size_t n_classes) {
  if (values.size() != labels.size()) fail(ErrorCode::LengthMismatch, "values vs labels");
  n_classes = std::max(n_classes, label_range(labels));
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::size_t> left(n_classes), right(n_classes);
  auto best = scan_sorted(values, labels, order, n_classes, left, right);
  if (!best.valid) best.information_gain = 0.0;
  return best;
}

int DecisionTree::predict(std::span<const double> x) const {
  std::size_t n = 0;
  while (nodes[n].feature >= 0) {
    const auto& node = nodes[n];
    n = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return nodes[n].majority_class;
}

int RandomForest::predict(std::span<const double> x) const {
  std::vector<std::size_t> votes(n_classes, 0);
  for (const auto& t : trees) ++votes[static_cast<std::size_t>(t.predict(x))];
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

namespace {

struct TreeBuilder {
  const LabeledDataset& data;
  const ForestConfig& cfg;
  std::size_t mtry;
  std::size_t n_classes;
  std::size_t root_size = 0;
  std::mt19937_64 rng;
  DecisionTree tree;
  std::vector<double> gains;
  // Scratch buffers reused across nodes.
  std::vector<double> column;
  std::vector<int> node_labels;
  std::vector<std::size_t> order;
  std::vector<std::size_t> left_counts, right_counts;
  std::vector<std::size_t> feature_pool;

  TreeBuilder(const LabeledDataset& d, const ForestConfig& c, std::size_t m, std::uint64_t seed)
      : data(d), cfg(c), mtry(m), n_classes(d.n_classes()), gains(d.n_features(), 0.0),
        left_counts(n_classes), right_counts(n_classes), feature_pool(d.n_features()) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    rng.seed(seq);
    std::iota(feature_pool.begin(), feature_pool.end(), 0);
  }

  int build(std::vector<std::size_t>& rows, std::size_t depth) {
    std::vector<std::size_t> counts(n_classes, 0);
    for (std::size_t r : rows) ++counts[static_cast<std::size_t>(data.labels[r])];
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes.back().majority_class =
        static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());

    const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;
    if (pure || rows.size() < cfg.min_samples_split || (cfg.max_depth > 0 && depth >= cfg.max_depth)) {
      return node_id;
    }

    // Partial Fisher-Yates: the first mtry entries of the pool are the candidates.
    for (std::size_t i = 0; i < mtry; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, feature_pool.size() - 1);
      std::swap(feature_pool[i], feature_pool[pick(rng)]);
    }
    std::vector<std::size_t> candidates(feature_pool.begin(), feature_pool.begin() + static_cast<std::ptrdiff_t>(mtry));
    std::sort(candidates.begin(), candidates.end());

    node_labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) node_labels[i] = data.labels[rows[i]];
    column.resize(rows.size());
    order.resize(rows.size());

    int best_feature = -1;
    ThresholdSplit best;
    for (std::size_t f : candidates) {
      const auto col = data.features.col(static_cast<Eigen::Index>(f));
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = col(static_cast<Eigen::Index>(rows[i]));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return column[a] < column[b]; });
      const auto split = scan_sorted(column, node_labels, order, n_classes, left_counts, right_counts);
      if (split.valid && (best_feature < 0 || split.information_gain > best.information_gain + kGainTieTolerance)) {
        best = split;
        best_feature = static_cast<int>(f);
      }
    }
    if (best_feature < 0 || !(best.information_gain > 0.0)) return node_id;

    const double weight = cfg.weighting == GainWeighting::NodeFraction
                              ? static_cast<double>(rows.size()) / static_cast<double>(root_size)
                              : 1.0;
    gains[static_cast<std::size_t>(best_feature)] += weight * best.information_gain;

    std::vector<std::size_t> left_rows, right_rows;
    const auto col = data.features.col(best_feature);
    for (std::size_t r : rows) {
      (col(static_cast<Eigen::Index>(r)) <= best.threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const int l = build(left_rows, depth + 1);
    const int r = build(right_rows, depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
    node.feature = best_feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return node_id;
  }

  void run() {
    const std::size_t n = data.n_samples();
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = draw(rng);
    std::sort(rows.begin(), rows.end());
    root_size = n;
    build(rows, 0);
  }
};

}  // namespace

ForestResult train_forest(const LabeledDataset& data, const ForestConfig& cfg) {
  data.validate();
  if (cfg.n_trees == 0) fail(ErrorCode::InvalidConfig, "forest needs at least one tree");
  if (data.n_features() == 0) fail(ErrorCode::DegenerateDataset, "no feature components");
  const auto counts = data.class_counts();
  const auto present = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
  if (present < 2) fail(ErrorCode::DegenerateDataset, "forest needs at least two classes");
  for (std::size_t c : counts) {
    if (c > 0 && c < 2) fail(ErrorCode::DegenerateDataset, "every class needs two samples");
  }

  std::size_t mtry = cfg.max_features_per_split;
  if (mtry == 0) {
    mtry = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(data.n_features()))));
  }
  if (mtry > data.n_features()) fail(ErrorCode::InvalidConfig, "max_features_per_split exceeds schema");
  mtry = std::max<std::size_t>(mtry, 1);

  std::vector<DecisionTree> trees(cfg.n_trees);
  std::vector<std::vector<double>> tree_gains(cfg.n_trees);
  parallel_for(cfg.n_trees, cfg.jobs, [&](std::size_t t) {
    TreeBuilder builder(data, cfg, mtry, cfg.rng_seed * 1000003ULL + t);
    builder.run();
    trees[t] = std::move(builder.tree);
    tree_gains[t] = std::move(builder.gains);
  });

  // Fixed tree-order summation keeps the report independent of scheduling.
  std::vector<double> total(data.n_features(), 0.0);
  for (const auto& g : tree_gains) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += g[i];
  }

  ForestResult out;
  out.forest.trees = std::move(trees);
  out.forest.n_classes = data.n_classes();
  out.report = make_report(data.schema.names(), std::move(total));
  return out;
}

SelectionReport make_report(std::vector<std::string> names, std::vector<double> gains) {
  if (names.size() != gains.size()) fail(ErrorCode::SchemaMismatch, "names vs gains");
  SelectionReport r;
  r.component_names = std::move(names);
  r.cumulative_ig = std::move(gains);
  r.retained.resize(r.cumulative_ig.size());
  for (std::size_t i = 0; i < r.cumulative_ig.size(); ++i) {
    r.retained[i] = r.cumulative_ig[i] > 0.0;
    if (r.retained[i]) ++r.retained_count;
  }
  return r;
}

FeatureVector apply_selection(const FeatureVector& vec, const SelectionReport& report) {
  if (vec.values.size() != report.retained.size()) {
    fail(ErrorCode::SchemaMismatch, "vector of " + std::to_string(vec.values.size()) +
                                        " vs report of " + std::to_string(report.retained.size()));
  }
  FeatureVector out;
  out.track_id = vec.track_id;
  out.label = vec.label;
  for (std::size_t i = 0; i < vec.values.size(); ++i) {
    if (report.retained[i]) out.values.push_back(vec.values[i]);
  }
  return out;
}

LabeledDataset apply_selection(const LabeledDataset& data, const SelectionReport& report) {
  if (data.schema.names() != report.component_names) {
    fail(ErrorCode::SchemaMismatch, "selection report was fit on a different schema");
  }
  const std::vector<bool>& mask = report.retained;
  const std::unique_ptr<bool[]> keep(new bool[mask.size()]);
  for (std::size_t i = 0; i < mask.size(); ++i) keep[i] = mask[i];
  return data.select_columns(std::span<const bool>(keep.get(), mask.size()));
}

void write_selection_csv(const std::filesystem::path& path, const SelectionReport& report) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "component_name,cumulative_ig,retained\n";
  for (std::size_t i = 0; i < report.component_names.size(); ++i) {
    out << report.component_names[i] << ',' << format_double(report.cumulative_ig[i]) << ','
        << (report.retained[i] ? 1 : 0) << '\n';
  }
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

SelectionReport read_selection_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("component_name,cumulative_ig,retained", 0) != 0) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": not a selection report");
  }
  std::vector<std::string> names;
  std::vector<double> gains;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto a = line.find(',');
    const auto b = line.rfind(',');
    if (a == std::string::npos || a == b) fail(ErrorCode::SchemaMismatch, "bad report line: " + line);
    names.push_back(line.substr(0, a));
    try {
      gains.push_back(std::stod(line.substr(a + 1, b - a - 1)));
    } catch (const std::logic_error&) {
      fail(ErrorCode::SchemaMismatch, "bad gain in: " + line);
    }
  }
  return make_report(std::move(names), std::move(gains));
}

}  // namespace genreforge
