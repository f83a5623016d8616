#include "genreforge/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "genreforge/error.hpp"
#include "genreforge/parallel.hpp"

namespace genreforge {

std::string to_string(const KernelSpec& k) {
  return k.kind == KernelKind::Linear ? "linear" : "rbf";
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    fail(ErrorCode::DimensionMismatch, "kernel operands of size " + std::to_string(x.size()) +
                                           " and " + std::to_string(y.size()));
  }
  if (spec.kind == KernelKind::Linear) {
    return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
  }
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] - y[i]) * (x[i] - y[i]);
  return std::exp(-spec.gamma * d);
}

void SvmConfig::validate() const {
  if (!(C > 0.0)) fail(ErrorCode::InvalidConfig, "C must be positive");
  if (!(tolerance > 0.0)) fail(ErrorCode::InvalidConfig, "tolerance must be positive");
  if (kernel.kind == KernelKind::Rbf && !(kernel.gamma > 0.0)) {
    fail(ErrorCode::InvalidConfig, "rbf gamma must be positive");
  }
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (x.row(i) - x.row(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

Eigen::MatrixXd rbf_from_distances(const Eigen::MatrixXd& sq_dist, double gamma) {
  return (-gamma * sq_dist.array()).exp().matrix();
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& x) {
  if (spec.kind == KernelKind::Rbf) return rbf_from_distances(squared_distances(x), spec.gamma);
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = x.row(i).dot(x.row(j));
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

BinarySolution solve_smo(const Eigen::MatrixXd& K, std::span<const int> y, double C,
                         double tolerance, std::size_t max_passes) {
  constexpr double kTau = 1e-12;
  const std::size_t n = y.size();
  if (static_cast<std::size_t>(K.rows()) != n || static_cast<std::size_t>(K.cols()) != n) {
    fail(ErrorCode::DimensionMismatch, "Gram matrix does not match label count");
  }
  const bool has_pos = std::find(y.begin(), y.end(), 1) != y.end();
  const bool has_neg = std::find(y.begin(), y.end(), -1) != y.end();
  if (!has_pos || !has_neg) fail(ErrorCode::SingleClass, "binary SVM needs both classes");

  BinarySolution sol;
  std::vector<double>& alpha = sol.alpha;
  alpha.assign(n, 0.0);
  std::vector<double> G(n, -1.0);  // gradient of 1/2 a'Qa - e'a
  const auto Q = [&](std::size_t i, std::size_t j) {
    return static_cast<double>(y[i] * y[j]) * K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  };
  const auto upper = [&](std::size_t t) { return alpha[t] >= C; };
  const auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  // Stop after `max_passes` consecutive sweeps of n steps without a dual decrease.
  const std::size_t max_iter = std::max<std::size_t>(10'000'000, 100 * n);
  double objective = 0.0;
  double pass_start_objective = 0.0;
  std::size_t stale_passes = 0;

  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (!upper(t) && -G[t] >= gmax) { gmax = -G[t]; i = t; }
      } else {
        if (!lower(t) && G[t] >= gmax) { gmax = G[t]; i = t; }
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    if (i < n) {
      const double kii = K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
      for (std::size_t t = 0; t < n; ++t) {
        const double kit = K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
        const double ktt = K(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t));
        if (y[t] == 1) {
          if (lower(t)) continue;
          const double diff = gmax + G[t];
          gmax2 = std::max(gmax2, G[t]);
          if (diff > 0.0) {
            double quad = kii + ktt - 2.0 * static_cast<double>(y[i]) * kit;
            if (quad <= 0.0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= best_obj) { best_obj = obj; j = t; }
          }
        } else {
          if (upper(t)) continue;
          const double diff = gmax - G[t];
          gmax2 = std::max(gmax2, -G[t]);
          if (diff > 0.0) {
            double quad = kii + ktt + 2.0 * static_cast<double>(y[i]) * kit;
            if (quad <= 0.0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= best_obj) { best_obj = obj; j = t; }
          }
        }
      }
    }
    if (i == n || j == n || gmax + gmax2 < tolerance) {
      sol.converged = true;
      break;
    }
    if (sol.iterations >= max_iter) break;
    ++sol.iterations;

    const double old_ai = alpha[i], old_aj = alpha[j];
    const double qij = Q(i, j);
    const double qii = Q(i, i), qjj = Q(j, j);
    if (y[i] != y[j]) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
      }
      if (diff > 0.0) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      } else {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
      } else {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
      }
      if (sum > C) {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
      }
    }
    alpha[i] = std::clamp(alpha[i], 0.0, C);
    alpha[j] = std::clamp(alpha[j], 0.0, C);

    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    // f changes by G_i dai + G_j daj + 1/2 (Qii dai^2 + 2 Qij dai daj + Qjj daj^2).
    objective += G[i] * dai + G[j] * daj +
                 0.5 * (qii * dai * dai + 2.0 * qij * dai * daj + qjj * daj * daj);
    for (std::size_t t = 0; t < n; ++t) G[t] += Q(i, t) * dai + Q(j, t) * daj;

    if (sol.iterations % std::max<std::size_t>(n, 1) == 0) {
      if (objective < pass_start_objective - 1e-12 * std::max(1.0, std::abs(objective))) {
        stale_passes = 0;
      } else if (++stale_passes >= max_passes) {
        break;
      }
      pass_start_objective = objective;
    }
  }

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = static_cast<double>(y[t]) * G[t];
    if (upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  sol.bias = -rho;
  return sol;
}

double BinaryModel::decision(const KernelSpec& kernel, std::span<const double> x) const {
  double acc = bias;
  for (Eigen::Index s = 0; s < support_vectors.rows(); ++s) {
    const Eigen::VectorXd sv = support_vectors.row(s).transpose();
    acc += coefficients(s) * kernel_eval(kernel, std::span<const double>(sv.data(), static_cast<std::size_t>(sv.size())), x);
  }
  return acc;
}

namespace {

BinaryModel to_model(const Eigen::MatrixXd& x, std::span<const std::size_t> rows,
                     std::span<const int> y, const BinarySolution& sol) {
  BinaryModel m;
  std::vector<std::size_t> sv;
  for (std::size_t t = 0; t < sol.alpha.size(); ++t) {
    if (sol.alpha[t] > 0.0) sv.push_back(t);
  }
  m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  m.coefficients.resize(static_cast<Eigen::Index>(sv.size()));
  m.alphas.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    const auto e = static_cast<Eigen::Index>(s);
    m.support_vectors.row(e) = x.row(static_cast<Eigen::Index>(rows[sv[s]]));
    m.alphas(e) = sol.alpha[sv[s]];
    m.coefficients(e) = sol.alpha[sv[s]] * y[sv[s]];
  }
  m.bias = sol.bias;
  return m;
}

Eigen::MatrixXd sub_gram(const Eigen::MatrixXd& gram, std::span<const std::size_t> idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      out(a, b) = gram(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)]),
                       static_cast<Eigen::Index>(idx[static_cast<std::size_t>(b)]));
    }
  }
  return out;
}

struct PairProblem {
  int positive = 0, negative = 1;
  std::vector<std::size_t> rows;  // indices into the Gram matrix
  std::vector<int> y;
};

std::vector<PairProblem> pair_problems(std::span<const std::size_t> rows, std::span<const int> labels,
                                       std::size_t n_classes) {
  std::vector<PairProblem> out;
  for (std::size_t a = 0; a < n_classes; ++a) {
    for (std::size_t b = a + 1; b < n_classes; ++b) {
      PairProblem p;
      p.positive = static_cast<int>(a);
      p.negative = static_cast<int>(b);
      for (std::size_t r : rows) {
        const int l = labels[r];
        if (l == p.positive || l == p.negative) {
          p.rows.push_back(r);
          p.y.push_back(l == p.positive ? 1 : -1);
        }
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

int vote_winner(const std::vector<int>& votes) {
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

}  // namespace

BinaryModel train_binary(const Eigen::MatrixXd& x, std::span<const int> y, const SvmConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(x.rows()) != y.size()) fail(ErrorCode::DimensionMismatch, "rows vs labels");
  const Eigen::MatrixXd gram = gram_matrix(cfg.kernel, x);
  const auto sol = solve_smo(gram, y, cfg.C, cfg.tolerance, cfg.max_passes);
  std::vector<std::size_t> rows(y.size());
  std::iota(rows.begin(), rows.end(), 0);
  return to_model(x, rows, y, sol);
}

std::vector<int> SvmModel::votes(std::span<const double> x) const {
  if (x.size() != dimension) {
    fail(ErrorCode::DimensionMismatch, "input of " + std::to_string(x.size()) + " for model of " +
                                           std::to_string(dimension));
  }
  std::vector<int> v(class_names.size(), 0);
  for (const auto& p : pairs) {
    ++v[static_cast<std::size_t>(p.decision(kernel, x) > 0.0 ? p.positive_class : p.negative_class)];
  }
  return v;
}

int SvmModel::predict(std::span<const double> x) const { return vote_winner(votes(x)); }

std::vector<int> SvmModel::predict(const Eigen::MatrixXd& x) const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Eigen::VectorXd row = x.row(r).transpose();
    out.push_back(predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))));
  }
  return out;
}

SvmModel train_svm(const LabeledDataset& data, const SvmConfig& cfg, std::size_t jobs) {
  cfg.validate();
  data.validate();
  if (data.n_classes() < 2) fail(ErrorCode::SingleClass, "need at least two classes");
  const Eigen::MatrixXd gram = gram_matrix(cfg.kernel, data.features);
  std::vector<std::size_t> all(data.n_samples());
  std::iota(all.begin(), all.end(), 0);
  const auto problems = pair_problems(all, data.labels, data.n_classes());

  SvmModel model;
  model.class_names = data.class_names;
  model.kernel = cfg.kernel;
  model.C = cfg.C;
  model.dimension = data.n_features();
  model.pairs.resize(problems.size());
  parallel_for(problems.size(), jobs, [&](std::size_t k) {
    const auto& p = problems[k];
    BinaryModel m;
    m.positive_class = p.positive;
    m.negative_class = p.negative;
    const bool both = std::count(p.y.begin(), p.y.end(), 1) > 0 &&
                      std::count(p.y.begin(), p.y.end(), -1) > 0;
    if (both) {
      const auto sol = solve_smo(sub_gram(gram, p.rows), p.y, cfg.C, cfg.tolerance, cfg.max_passes);
      m = to_model(data.features, p.rows, p.y, sol);
      m.positive_class = p.positive;
      m.negative_class = p.negative;
    } else {
      // A class absent from training: the pair always votes for the present one.
      m.support_vectors.resize(0, data.features.cols());
      m.bias = std::count(p.y.begin(), p.y.end(), 1) > 0 ? 1.0 : -1.0;
    }
    model.pairs[k] = std::move(m);
  });
  return model;
}

SvmGrid SvmGrid::standard() {
  SvmGrid g;
  for (int e = -2; e <= 6; ++e) g.c_values.push_back(std::ldexp(1.0, e));
  for (int e = -8; e <= 0; ++e) g.gamma_values.push_back(std::ldexp(1.0, e));
  return g;
}

std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t n_classes,
                                          std::size_t folds, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fold(labels.size(), 0);
  std::size_t offset = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t k = 0; k < members.size(); ++k) fold[members[k]] = (offset + k) % folds;
    offset += members.size();
  }
  return fold;
}

bool prefer_on_tie(const SvmConfig& a, const SvmConfig& b) {
  if (a.C != b.C) return a.C < b.C;
  if (a.kernel.kind != b.kernel.kind) return a.kernel.kind == KernelKind::Linear;
  if (a.kernel.kind == KernelKind::Rbf) return a.kernel.gamma < b.kernel.gamma;
  return false;
}

GridSearchResult grid_search_cv(const LabeledDataset& data, const SvmGrid& grid,
                                std::uint64_t seed, std::size_t jobs) {
  data.validate();
  if (grid.folds < 2) fail(ErrorCode::InvalidConfig, "need at least two folds");
  if (grid.c_values.empty() || grid.kernels.empty()) fail(ErrorCode::InvalidConfig, "empty grid");
  for (std::size_t c : data.class_counts()) {
    if (c < grid.folds) {
      fail(ErrorCode::TooFewSamples, "a class has " + std::to_string(c) + " samples for " +
                                         std::to_string(grid.folds) + " folds");
    }
  }

  std::vector<SvmConfig> points;
  for (KernelKind kind : grid.kernels) {
    for (double c : grid.c_values) {
      if (kind == KernelKind::Linear) {
        points.push_back({{KernelKind::Linear, 0.0}, c, grid.tolerance, grid.max_passes});
      } else {
        if (grid.gamma_values.empty()) fail(ErrorCode::InvalidConfig, "rbf without gamma values");
        for (double g : grid.gamma_values) {
          points.push_back({{KernelKind::Rbf, g}, c, grid.tolerance, grid.max_passes});
        }
      }
    }
  }
  for (const auto& p : points) p.validate();

  // One Gram matrix per distinct kernel, shared by every C and fold.
  const Eigen::MatrixXd sq = squared_distances(data.features);
  std::vector<KernelSpec> kernels;
  std::vector<std::size_t> kernel_of(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto& k = points[p].kernel;
    auto it = std::find_if(kernels.begin(), kernels.end(), [&](const KernelSpec& q) {
      return q.kind == k.kind && q.gamma == k.gamma;
    });
    if (it == kernels.end()) it = kernels.insert(kernels.end(), k);
    kernel_of[p] = static_cast<std::size_t>(it - kernels.begin());
  }
  std::vector<Eigen::MatrixXd> grams(kernels.size());
  parallel_for(kernels.size(), jobs, [&](std::size_t k) {
    grams[k] = kernels[k].kind == KernelKind::Rbf ? rbf_from_distances(sq, kernels[k].gamma)
                                                  : gram_matrix(kernels[k], data.features);
  });

  const auto fold_of = stratified_folds(data.labels, data.n_classes(), grid.folds, seed);
  std::vector<std::vector<std::size_t>> train_rows(grid.folds), test_rows(grid.folds);
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    for (std::size_t f = 0; f < grid.folds; ++f) (f == fold_of[i] ? test_rows : train_rows)[f].push_back(i);
  }

  const std::size_t n_tasks = points.size() * grid.folds;
  std::vector<double> acc(n_tasks, 0.0);
  parallel_for(n_tasks, jobs, [&](std::size_t task) {
    const std::size_t p = task / grid.folds, f = task % grid.folds;
    const auto& cfg = points[p];
    const auto& gram = grams[kernel_of[p]];
    const auto problems = pair_problems(train_rows[f], data.labels, data.n_classes());
    std::vector<std::vector<int>> votes(test_rows[f].size(), std::vector<int>(data.n_classes(), 0));
    for (const auto& prob : problems) {
      const auto sol = solve_smo(sub_gram(gram, prob.rows), prob.y, cfg.C, cfg.tolerance, cfg.max_passes);
      for (std::size_t t = 0; t < test_rows[f].size(); ++t) {
        double d = sol.bias;
        const auto row = static_cast<Eigen::Index>(test_rows[f][t]);
        for (std::size_t s = 0; s < prob.rows.size(); ++s) {
          if (sol.alpha[s] > 0.0) d += sol.alpha[s] * prob.y[s] * gram(row, static_cast<Eigen::Index>(prob.rows[s]));
        }
        ++votes[t][static_cast<std::size_t>(d > 0.0 ? prob.positive : prob.negative)];
      }
    }
    std::size_t correct = 0;
    for (std::size_t t = 0; t < test_rows[f].size(); ++t) {
      if (vote_winner(votes[t]) == data.labels[test_rows[f][t]]) ++correct;
    }
    acc[task] = static_cast<double>(correct) / static_cast<double>(test_rows[f].size());
  });

  GridSearchResult result;
  std::size_t best = 0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    CvRow row;
    row.kernel = points[p].kernel;
    row.C = points[p].C;
    row.fold_accuracy.assign(acc.begin() + static_cast<std::ptrdiff_t>(p * grid.folds),
                             acc.begin() + static_cast<std::ptrdiff_t>((p + 1) * grid.folds));
    row.mean_accuracy = std::accumulate(row.fold_accuracy.begin(), row.fold_accuracy.end(), 0.0) /
                        static_cast<double>(grid.folds);
    result.table.push_back(std::move(row));
    const double m = result.table.back().mean_accuracy;
    const double bm = result.table[best].mean_accuracy;
    if (p > 0 && (m > bm || (m == bm && prefer_on_tie(points[p], points[best])))) best = p;
  }
  result.best = points[best];
  result.best_accuracy = result.table[best].mean_accuracy;
  return result;
}

void save_svm(const std::filesystem::path& path, const SvmModel& model) {
  nlohmann::json j;
  j["format"] = "genreforge-svm";
  j["version"] = 1;
  j["classes"] = model.class_names;
  j["kernel"] = {{"kind", to_string(model.kernel)}, {"gamma", model.kernel.gamma}};
  j["C"] = model.C;
  j["dimension"] = model.dimension;
  j["pairs"] = nlohmann::json::array();
  for (const auto& p : model.pairs) {
    nlohmann::json jp;
    jp["positive"] = p.positive_class;
    jp["negative"] = p.negative_class;
    jp["bias"] = p.bias;
    jp["alphas"] = std::vector<double>(p.alphas.data(), p.alphas.data() + p.alphas.size());
    jp["coefficients"] = std::vector<double>(p.coefficients.data(), p.coefficients.data() + p.coefficients.size());
    nlohmann::json svs = nlohmann::json::array();
    for (Eigen::Index r = 0; r < p.support_vectors.rows(); ++r) {
      const Eigen::VectorXd row = p.support_vectors.row(r).transpose();
      svs.push_back(std::vector<double>(row.data(), row.data() + row.size()));
    }
    jp["support_vectors"] = std::move(svs);
    j["pairs"].push_back(std::move(jp));
  }
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

SvmModel load_svm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  SvmModel m;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("format") != "genreforge-svm") fail(ErrorCode::SchemaMismatch, "not an SVM model");
    m.class_names = j.at("classes").get<std::vector<std::string>>();
    const auto kind = j.at("kernel").at("kind").get<std::string>();
    m.kernel.kind = kind == "linear" ? KernelKind::Linear : KernelKind::Rbf;
    m.kernel.gamma = j.at("kernel").at("gamma").get<double>();
    m.C = j.at("C").get<double>();
    m.dimension = j.at("dimension").get<std::size_t>();
    for (const auto& jp : j.at("pairs")) {
      BinaryModel p;
      p.positive_class = jp.at("positive").get<int>();
      p.negative_class = jp.at("negative").get<int>();
      p.bias = jp.at("bias").get<double>();
      const auto alphas = jp.at("alphas").get<std::vector<double>>();
      const auto coef = jp.at("coefficients").get<std::vector<double>>();
      const auto svs = jp.at("support_vectors").get<std::vector<std::vector<double>>>();
      if (alphas.size() != svs.size() || coef.size() != svs.size()) {
        fail(ErrorCode::SchemaMismatch, "support vector count mismatch");
      }
      p.alphas = Eigen::Map<const Eigen::VectorXd>(alphas.data(), static_cast<Eigen::Index>(alphas.size()));
      p.coefficients = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
      p.support_vectors.resize(static_cast<Eigen::Index>(svs.size()), static_cast<Eigen::Index>(m.dimension));
      for (std::size_t r = 0; r < svs.size(); ++r) {
        if (svs[r].size() != m.dimension) fail(ErrorCode::SchemaMismatch, "support vector width");
        for (std::size_t c = 0; c < m.dimension; ++c) {
          p.support_vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = svs[r][c];
        }
      }
      m.pairs.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": " + e.what());
  }
  return m;
}

void write_cv_table(const std::filesystem::path& path, const GridSearchResult& result) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  const std::size_t folds = result.table.empty() ? 0 : result.table.front().fold_accuracy.size();
  out << "kernel,C,gamma";
  for (std::size_t f = 0; f < folds; ++f) out << ",fold_" << f;
  out << ",mean\n";
  for (const auto& row : result.table) {
    out << to_string(row.kernel) << ',' << format_double(row.C) << ','
        << (row.kernel.kind == KernelKind::Rbf ? format_double(row.kernel.gamma) : std::string(""));
    for (double a : row.fold_accuracy) out << ',' << format_double(a);
    out << ',' << format_double(row.mean_accuracy) << '\n';
  }
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

}  // namespace genreforge
