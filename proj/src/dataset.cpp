#include "genreforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "genreforge/error.hpp"

namespace genreforge {

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(n_classes(), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.schema = schema;
  out.class_names = class_names;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  out.track_ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
    out.track_ids.push_back(track_ids[rows[i]]);
  }
  return out;
}

LabeledDataset LabeledDataset::select_columns(std::span<const bool> keep) const {
  LabeledDataset out;
  out.schema = schema.project(keep);
  out.class_names = class_names;
  out.labels = labels;
  out.track_ids = track_ids;
  out.features.resize(features.rows(), static_cast<Eigen::Index>(out.schema.size()));
  Eigen::Index j = 0;
  for (std::size_t c = 0; c < keep.size(); ++c) {
    if (keep[c]) out.features.col(j++) = features.col(static_cast<Eigen::Index>(c));
  }
  return out;
}

void LabeledDataset::validate() const {
  if (schema.size() != n_features()) {
    fail(ErrorCode::SchemaMismatch, "schema has " + std::to_string(schema.size()) +
                                        " components, matrix has " + std::to_string(n_features()));
  }
  if (labels.size() != n_samples() || track_ids.size() != n_samples()) {
    fail(ErrorCode::SchemaMismatch, "label / id count differs from row count");
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= n_classes()) {
      fail(ErrorCode::DegenerateDataset, "label index out of range");
    }
  }
}

LabeledDataset make_dataset(const std::vector<FeatureVector>& vectors, FeatureSchema schema) {
  LabeledDataset d;
  d.schema = std::move(schema);
  for (const auto& v : vectors) d.class_names.push_back(v.label);
  std::sort(d.class_names.begin(), d.class_names.end());
  d.class_names.erase(std::unique(d.class_names.begin(), d.class_names.end()), d.class_names.end());

  d.features.resize(static_cast<Eigen::Index>(vectors.size()),
                    static_cast<Eigen::Index>(d.schema.size()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].values.size() != d.schema.size()) {
      fail(ErrorCode::SchemaMismatch, vectors[i].track_id + " has " +
                                          std::to_string(vectors[i].values.size()) + " values");
    }
    for (std::size_t j = 0; j < d.schema.size(); ++j) {
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vectors[i].values[j];
    }
    const auto it = std::lower_bound(d.class_names.begin(), d.class_names.end(), vectors[i].label);
    d.labels.push_back(static_cast<int>(it - d.class_names.begin()));
    d.track_ids.push_back(vectors[i].track_id);
  }
  return d;
}

LabeledDataset hconcat(const LabeledDataset& left, const LabeledDataset& right) {
  if (left.n_samples() != right.n_samples() || left.labels != right.labels) {
    fail(ErrorCode::SchemaMismatch, "datasets describe different tracks");
  }
  LabeledDataset out = left;
  out.schema.components.insert(out.schema.components.end(), right.schema.components.begin(),
                               right.schema.components.end());
  out.features.conservativeResize(Eigen::NoChange, left.features.cols() + right.features.cols());
  out.features.rightCols(right.features.cols()) = right.features;
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FeatureSchema parse_schema(std::span<const std::string> names) {
  FeatureSchema schema;
  for (const auto& n : names) {
    const auto p1 = n.find('.');
    const auto p2 = n.rfind('.');
    if (p1 == std::string::npos || p1 == p2) {
      fail(ErrorCode::SchemaMismatch, "malformed component name '" + n + "'");
    }
    ComponentDescriptor c;
    c.family = n.substr(0, p1);
    c.statistic = parse_statistic(n.substr(p1 + 1, p2 - p1 - 1));
    try {
      std::size_t used = 0;
      c.index = std::stoul(n.substr(p2 + 1), &used);
      if (used != n.size() - p2 - 1) throw std::invalid_argument(n);
    } catch (const std::logic_error&) {
      fail(ErrorCode::SchemaMismatch, "malformed component index in '" + n + "'");
    }
    schema.components.push_back(std::move(c));
  }
  return schema;
}

}  // namespace genreforge
