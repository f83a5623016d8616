#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "genreforge/dataset.hpp"
#include "genreforge/error.hpp"

namespace genreforge {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double parse_value(const std::string& s, std::size_t line_no) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (s.empty() || end != begin + s.size() || errno == ERANGE || !std::isfinite(v)) {
    fail(ErrorCode::SchemaMismatch, "line " + std::to_string(line_no) + ": bad value '" + s + "'");
  }
  return v;
}

void check_text_field(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    fail(ErrorCode::SchemaMismatch, "field '" + s + "' contains a separator");
  }
}

}  // namespace

void write_feature_csv(const std::filesystem::path& path, const LabeledDataset& data) {
  data.validate();
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& name : data.schema.names()) out << name << ',';
  out << "track_id,label\n";
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    for (std::size_t j = 0; j < data.n_features(); ++j) {
      out << format_double(data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
          << ',';
    }
    const auto& label = data.class_names[static_cast<std::size_t>(data.labels[i])];
    check_text_field(data.track_ids[i]);
    check_text_field(label);
    out << data.track_ids[i] << ',' << label << '\n';
  }
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

LabeledDataset read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::SchemaMismatch, path.string() + " is empty");
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[header.size() - 2] != "track_id" || header.back() != "label") {
    fail(ErrorCode::SchemaMismatch, path.string() + ": header must end with track_id,label");
  }
  header.resize(header.size() - 2);
  const std::set<std::string> unique(header.begin(), header.end());
  if (unique.size() != header.size()) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": duplicate component names");
  }
  const FeatureSchema schema = parse_schema(header);

  std::vector<FeatureVector> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != schema.size() + 2) {
      fail(ErrorCode::SchemaMismatch, path.string() + ":" + std::to_string(line_no) + " has " +
                                          std::to_string(fields.size()) + " fields, expected " +
                                          std::to_string(schema.size() + 2));
    }
    FeatureVector fv;
    fv.values.reserve(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) fv.values.push_back(parse_value(fields[j], line_no));
    fv.track_id = fields[schema.size()];
    fv.label = fields[schema.size() + 1];
    rows.push_back(std::move(fv));
  }
  if (rows.empty()) fail(ErrorCode::SchemaMismatch, path.string() + " has no rows");
  return make_dataset(rows, schema);
}

}  // namespace genreforge
