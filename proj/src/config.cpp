#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "genreforge/error.hpp"
#include "genreforge/pipeline.hpp"

namespace genreforge {

using nlohmann::json;

namespace {

// Reads optional keys from one JSON object and rejects keys it was never asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorCode::InvalidConfig, where() + " must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::InvalidConfig, where() + key + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string sub(const char* key) const { return where() + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) fail(ErrorCode::InvalidConfig, "unknown config key " + where() + item.key());
    }
  }

 private:
  std::string where() const { return path_.empty() ? std::string() : path_ + "."; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const char* source_name(SourceKind k) {
  switch (k) {
    case SourceKind::WavDirectory: return "wav_directory";
    case SourceKind::FeatureCsv: return "feature_csv";
    case SourceKind::Synthetic: return "synthetic";
  }
  return "?";
}

SourceKind parse_source(const std::string& s) {
  for (SourceKind k : {SourceKind::WavDirectory, SourceKind::FeatureCsv, SourceKind::Synthetic}) {
    if (s == source_name(k)) return k;
  }
  fail(ErrorCode::InvalidConfig, "unknown data.source '" + s + "'");
}

KernelKind parse_kernel(const std::string& s) {
  if (s == "linear") return KernelKind::Linear;
  if (s == "rbf") return KernelKind::Rbf;
  fail(ErrorCode::InvalidConfig, "unknown kernel '" + s + "'");
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Section top(root, "");

  if (const json* d = top.child("data")) {
    Section s(*d, top.sub("data"));
    std::string source = source_name(cfg.data.kind);
    std::string path = cfg.data.path.string();
    s.read("source", source);
    s.read("path", path);
    cfg.data.kind = parse_source(source);
    cfg.data.path = path;
    if (const json* syn = s.child("synthetic")) {
      Section y(*syn, s.sub("synthetic"));
      auto& sc = cfg.data.synthetic;
      y.read("n_classes", sc.n_classes);
      y.read("per_class", sc.per_class);
      y.read("n_informative", sc.n_informative);
      y.read("separation", sc.separation);
      y.read("seed", sc.seed);
      y.finish();
    }
    s.finish();
  }

  top.read("n_repetitions", cfg.n_repetitions);
  top.read("train_size", cfg.train_size);
  top.read("test_size", cfg.test_size);
  top.read("seeds", cfg.seeds);
  std::vector<std::string> stages;
  for (Stage st : cfg.stages) stages.emplace_back(to_string(st));
  top.read("stages", stages);
  cfg.stages.clear();
  for (const auto& name : stages) cfg.stages.push_back(parse_stage(name));
  top.read("scale_whole_dataset", cfg.scale_whole_dataset);
  top.read("jobs", cfg.jobs);

  if (const json* e = top.child("extraction")) {
    Section s(*e, top.sub("extraction"));
    auto& x = cfg.extraction;
    s.read("frame_ms", x.frame_ms);
    s.read("frame_overlap", x.frame_overlap);
    s.read("window_s", x.window_s);
    s.read("window_overlap", x.window_overlap);
    s.read("rolloff_fraction", x.dsp.rolloff_fraction);
    s.read("log_floor", x.dsp.log_floor);
    s.read("n_subframes", x.dsp.n_subframes);
    s.read("tuning_hz", x.dsp.tuning_hz);
    s.read("min_bpm", x.beat.min_bpm);
    s.read("max_bpm", x.beat.max_bpm);
    s.finish();
  }

  if (const json* f = top.child("forest")) {
    Section s(*f, top.sub("forest"));
    auto& fc = cfg.forest;
    s.read("n_trees", fc.n_trees);
    s.read("max_features_per_split", fc.max_features_per_split);
    s.read("max_depth", fc.max_depth);
    s.read("min_samples_split", fc.min_samples_split);
    std::string weighting = fc.weighting == GainWeighting::NodeFraction ? "node_fraction" : "unweighted";
    s.read("weighting", weighting);
    if (weighting == "node_fraction") {
      fc.weighting = GainWeighting::NodeFraction;
    } else if (weighting == "unweighted") {
      fc.weighting = GainWeighting::Unweighted;
    } else {
      fail(ErrorCode::InvalidConfig, "forest.weighting must be node_fraction or unweighted");
    }
    s.finish();
  }

  if (const json* a = top.child("autoencoder")) {
    Section s(*a, top.sub("autoencoder"));
    auto& ae = cfg.autoencoder;
    s.read("hidden", ae.hidden);
    s.read("code", ae.code);
    s.read("dropout", ae.dropout);
    s.read("epochs", ae.epochs);
    s.read("batch_size", ae.batch_size);
    s.read("learning_rate", ae.optimizer.learning_rate);
    s.read("rho", ae.optimizer.rho);
    s.read("epsilon", ae.optimizer.epsilon);
    s.finish();
  }

  if (const json* v = top.child("svm")) {
    Section s(*v, top.sub("svm"));
    auto& g = cfg.svm;
    std::vector<std::string> kernels;
    for (KernelKind k : g.kernels) kernels.push_back(k == KernelKind::Linear ? "linear" : "rbf");
    s.read("kernels", kernels);
    g.kernels.clear();
    for (const auto& k : kernels) g.kernels.push_back(parse_kernel(k));
    s.read("c_values", g.c_values);
    s.read("gamma_values", g.gamma_values);
    s.read("folds", g.folds);
    s.read("tolerance", g.tolerance);
    s.read("max_passes", g.max_passes);
    s.finish();
  }

  top.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["data"] = {{"source", source_name(cfg.data.kind)},
               {"path", cfg.data.path.string()},
               {"synthetic",
                {{"n_classes", cfg.data.synthetic.n_classes},
                 {"per_class", cfg.data.synthetic.per_class},
                 {"n_informative", cfg.data.synthetic.n_informative},
                 {"separation", cfg.data.synthetic.separation},
                 {"seed", cfg.data.synthetic.seed}}}};
  j["n_repetitions"] = cfg.n_repetitions;
  j["train_size"] = cfg.train_size;
  j["test_size"] = cfg.test_size;
  j["seeds"] = cfg.seeds;
  std::vector<std::string> stages;
  for (Stage st : cfg.stages) stages.emplace_back(to_string(st));
  j["stages"] = stages;
  j["scale_whole_dataset"] = cfg.scale_whole_dataset;
  j["jobs"] = cfg.jobs;
  const auto& x = cfg.extraction;
  j["extraction"] = {{"frame_ms", x.frame_ms},
                     {"frame_overlap", x.frame_overlap},
                     {"window_s", x.window_s},
                     {"window_overlap", x.window_overlap},
                     {"rolloff_fraction", x.dsp.rolloff_fraction},
                     {"log_floor", x.dsp.log_floor},
                     {"n_subframes", x.dsp.n_subframes},
                     {"tuning_hz", x.dsp.tuning_hz},
                     {"min_bpm", x.beat.min_bpm},
                     {"max_bpm", x.beat.max_bpm}};
  const auto& f = cfg.forest;
  j["forest"] = {{"n_trees", f.n_trees},
                 {"max_features_per_split", f.max_features_per_split},
                 {"max_depth", f.max_depth},
                 {"min_samples_split", f.min_samples_split},
                 {"weighting", f.weighting == GainWeighting::NodeFraction ? "node_fraction" : "unweighted"}};
  const auto& a = cfg.autoencoder;
  j["autoencoder"] = {{"hidden", a.hidden},
                      {"code", a.code},
                      {"dropout", a.dropout},
                      {"epochs", a.epochs},
                      {"batch_size", a.batch_size},
                      {"learning_rate", a.optimizer.learning_rate},
                      {"rho", a.optimizer.rho},
                      {"epsilon", a.optimizer.epsilon}};
  std::vector<std::string> kernels;
  for (KernelKind k : cfg.svm.kernels) kernels.push_back(k == KernelKind::Linear ? "linear" : "rbf");
  j["svm"] = {{"kernels", kernels},
              {"c_values", cfg.svm.c_values},
              {"gamma_values", cfg.svm.gamma_values},
              {"folds", cfg.svm.folds},
              {"tolerance", cfg.svm.tolerance},
              {"max_passes", cfg.svm.max_passes}};
  return j.dump(2);
}

}  // namespace genreforge
