#include "genreforge/autoencoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "genreforge/error.hpp"

namespace genreforge {

AutoencoderConfig AutoencoderConfig::standard(std::size_t input_dim, std::size_t hidden,
                                              std::size_t code, double dropout) {
  AutoencoderConfig cfg;
  cfg.layers = {
      {input_dim, hidden, Activation::PReLU, dropout, Init::HeNormal},
      {hidden, code, Activation::PReLU, dropout, Init::HeNormal},
      {code, hidden, Activation::PReLU, 0.0, Init::HeNormal},
      {hidden, input_dim, Activation::Sigmoid, 0.0, Init::HeUniform},
  };
  cfg.code_layer = 1;
  return cfg;
}

void AutoencoderConfig::validate() const {
  if (layers.empty()) fail(ErrorCode::InvalidConfig, "autoencoder has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& s = layers[l];
    if (s.fan_in == 0 || s.fan_out == 0) fail(ErrorCode::InvalidConfig, "layer with zero units");
    if (!(s.dropout_p >= 0.0 && s.dropout_p < 1.0)) {
      fail(ErrorCode::InvalidConfig, "dropout probability outside [0, 1)");
    }
    if (l > 0 && layers[l - 1].fan_out != s.fan_in) {
      fail(ErrorCode::InvalidConfig, "layer " + std::to_string(l) + " fan_in mismatch");
    }
  }
  if (layers.back().fan_out != layers.front().fan_in) {
    fail(ErrorCode::InvalidConfig, "output width differs from input width");
  }
  if (layers.back().activation != Activation::Sigmoid || layers.back().dropout_p != 0.0) {
    fail(ErrorCode::InvalidConfig, "output layer must be sigmoid without dropout");
  }
  if (code_layer + 1 >= layers.size()) fail(ErrorCode::InvalidConfig, "code layer out of range");
  if (batch_size == 0) fail(ErrorCode::InvalidConfig, "batch size must be positive");
}

Autoencoder::Autoencoder(AutoencoderConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  for (const auto& s : cfg_.layers) {
    Layer l;
    l.spec = s;
    l.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.fan_out),
                                      static_cast<Eigen::Index>(s.fan_in));
    l.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.fan_out));
    l.slopes = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(s.fan_out), 0.25);
    layers_.push_back(std::move(l));
  }
}

std::vector<std::span<double>> Autoencoder::parameter_blocks() {
  ++generation_;
  std::vector<std::span<double>> out;
  for (auto& l : layers_) {
    out.emplace_back(l.weights.data(), static_cast<std::size_t>(l.weights.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    out.emplace_back(l.slopes.data(), static_cast<std::size_t>(l.slopes.size()));
  }
  return out;
}

std::size_t Autoencoder::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    n += static_cast<std::size_t>(l.weights.size() + l.bias.size() + l.slopes.size());
  }
  return n;
}

Layer he_init(const LayerSpec& spec, std::mt19937_64& rng) {
  Layer l;
  l.spec = spec;
  const auto rows = static_cast<Eigen::Index>(spec.fan_out);
  const auto cols = static_cast<Eigen::Index>(spec.fan_in);
  l.weights.resize(rows, cols);
  const double fan_in = static_cast<double>(spec.fan_in);
  if (spec.init == Init::HeNormal) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = dist(rng);
  } else {
    const double limit = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = dist(rng);
  }
  l.bias = Eigen::VectorXd::Zero(rows);
  l.slopes = Eigen::VectorXd::Constant(rows, 0.25);
  return l;
}

Autoencoder init_autoencoder(const AutoencoderConfig& cfg) {
  Autoencoder model(cfg);
  std::mt19937_64 rng(cfg.rng_seed);
  auto& layers = model.mutable_layers();
  for (auto& l : layers) l = he_init(l.spec, rng);
  return model;
}

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Eigen::MatrixXd prelu(const Eigen::MatrixXd& z, const Eigen::VectorXd& slopes) {
  Eigen::MatrixXd out = z;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      if (!(z(i, j) > 0.0)) out(i, j) = slopes(i) * z(i, j);
    }
  }
  return out;
}

}  // namespace

ForwardResult forward(const Autoencoder& model, const Eigen::MatrixXd& x, Mode mode,
                      std::mt19937_64* rng) {
  const auto& layers = model.layers();
  if (layers.empty()) fail(ErrorCode::InvalidConfig, "empty model");
  if (static_cast<std::size_t>(x.rows()) != model.config().input_dim()) {
    fail(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.rows()) + " rows, model expects " +
                                           std::to_string(model.config().input_dim()));
  }
  if (mode == Mode::Train && rng == nullptr) fail(ErrorCode::InvalidConfig, "train mode needs an rng");

  ForwardResult res;
  auto& cache = res.cache;
  cache.generation = model.generation();
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    cache.inputs.push_back(a);
    Eigen::MatrixXd z = layer.weights * a;
    z.colwise() += layer.bias;
    Eigen::MatrixXd h = layer.spec.activation == Activation::Sigmoid ? sigmoid(z) : prelu(z, layer.slopes);
    Eigen::MatrixXd mask;
    if (mode == Mode::Train && layer.spec.dropout_p > 0.0) {
      const double p = layer.spec.dropout_p;
      const double keep_scale = 1.0 / (1.0 - p);
      mask.resize(h.rows(), h.cols());
      for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = unit(*rng) < p ? 0.0 : keep_scale;
      h = h.cwiseProduct(mask);
    }
    cache.pre.push_back(std::move(z));
    cache.masks.push_back(std::move(mask));
    if (l == model.config().code_layer) res.code = h;
    a = std::move(h);
  }
  cache.output = a;
  cache.valid = true;
  res.reconstruction = std::move(a);
  return res;
}

double bce_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& reconstruction) {
  if (x.rows() != reconstruction.rows() || x.cols() != reconstruction.cols()) {
    fail(ErrorCode::DimensionMismatch, "loss operands differ in shape");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double t = x.data()[i];
    const double p = std::clamp(reconstruction.data()[i], kBceClamp, 1.0 - kBceClamp);
    acc -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return acc / static_cast<double>(x.size());
}

std::vector<std::span<const double>> Gradients::blocks() const {
  std::vector<std::span<const double>> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.emplace_back(weights[l].data(), static_cast<std::size_t>(weights[l].size()));
    out.emplace_back(bias[l].data(), static_cast<std::size_t>(bias[l].size()));
    out.emplace_back(slopes[l].data(), static_cast<std::size_t>(slopes[l].size()));
  }
  return out;
}

Eigen::MatrixXd output_delta(const ForwardCache& cache, const Eigen::MatrixXd& x) {
  const auto& out = cache.output;
  if (x.rows() != out.rows() || x.cols() != out.cols()) {
    fail(ErrorCode::DimensionMismatch, "target differs from cached output shape");
  }
  // d/dz of mean BCE through a sigmoid is (x' - x) / N inside the clamp band, 0 outside.
  const double inv_n = 1.0 / static_cast<double>(x.size());
  Eigen::MatrixXd delta(out.rows(), out.cols());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double p = out.data()[i];
    const bool clamped = p < kBceClamp || p > 1.0 - kBceClamp;
    delta.data()[i] = clamped ? 0.0 : (p - x.data()[i]) * inv_n;
  }
  return delta;
}

Gradients backward(const Autoencoder& model, const ForwardCache& cache, const Eigen::MatrixXd& x) {
  if (!cache.valid || cache.generation != model.generation()) {
    fail(ErrorCode::StaleCache, "forward cache does not belong to the current parameters");
  }
  const auto& layers = model.layers();
  const std::size_t n_layers = layers.size();
  Gradients g;
  g.weights.resize(n_layers);
  g.bias.resize(n_layers);
  g.slopes.resize(n_layers);

  Eigen::MatrixXd delta = output_delta(cache, x);  // dL/dZ of the current layer
  for (std::size_t li = n_layers; li-- > 0;) {
    const auto& layer = layers[li];
    g.weights[li] = delta * cache.inputs[li].transpose();
    g.bias[li] = delta.rowwise().sum();
    if (g.slopes[li].size() == 0) g.slopes[li] = Eigen::VectorXd::Zero(layer.bias.size());
    if (li == 0) break;

    // Back through layer li-1's dropout and activation.
    Eigen::MatrixXd grad_h = layer.weights.transpose() * delta;
    const auto& mask = cache.masks[li - 1];
    if (mask.size() > 0) grad_h = grad_h.cwiseProduct(mask);
    const auto& below = layers[li - 1];
    const auto& z = cache.pre[li - 1];
    Eigen::VectorXd dslope = Eigen::VectorXd::Zero(z.rows());
    if (below.spec.activation == Activation::PReLU) {
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
          if (!(z(i, j) > 0.0)) {
            dslope(i) += grad_h(i, j) * z(i, j);
            grad_h(i, j) *= below.slopes(i);
          }
        }
      }
    } else {
      const Eigen::MatrixXd s = sigmoid(z);
      grad_h = grad_h.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix()));
    }
    g.slopes[li - 1] = dslope;
    delta = std::move(grad_h);
  }
  return g;
}

void adadelta_update(std::span<double> params, std::span<const double> grads,
                     AdadeltaAccumulators& acc, const AdadeltaConfig& cfg) {
  if (params.size() != grads.size()) fail(ErrorCode::DimensionMismatch, "gradient block size");
  if (acc.mean_sq_grad.size() != params.size()) {
    acc.mean_sq_grad.assign(params.size(), 0.0);
    acc.mean_sq_update.assign(params.size(), 0.0);
  }
  const double rho = cfg.rho, eps = cfg.epsilon;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    acc.mean_sq_grad[i] = rho * acc.mean_sq_grad[i] + (1.0 - rho) * g * g;
    const double update =
        -std::sqrt(acc.mean_sq_update[i] + eps) / std::sqrt(acc.mean_sq_grad[i] + eps) * g;
    acc.mean_sq_update[i] = rho * acc.mean_sq_update[i] + (1.0 - rho) * update * update;
    params[i] += cfg.learning_rate * update;
  }
}

AdadeltaOptimizer::AdadeltaOptimizer(const Autoencoder& model, AdadeltaConfig cfg) : cfg_(cfg) {
  state_.resize(model.layers().size() * 3);
}

void AdadeltaOptimizer::step(Autoencoder& model, const Gradients& grads) {
  auto params = model.parameter_blocks();
  const auto g = grads.blocks();
  if (g.size() != params.size()) fail(ErrorCode::DimensionMismatch, "gradient block count");
  for (std::size_t b = 0; b < params.size(); ++b) adadelta_update(params[b], g[b], state_[b], cfg_);
}

std::size_t batches_per_epoch(std::size_t n, std::size_t batch_size) {
  return batch_size == 0 ? 0 : (n + batch_size - 1) / batch_size;
}

Autoencoder train_autoencoder(const Eigen::MatrixXd& data, const AutoencoderConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(data.cols()) != cfg.input_dim()) {
    fail(ErrorCode::DimensionMismatch, "training data has " + std::to_string(data.cols()) +
                                           " columns, model expects " + std::to_string(cfg.input_dim()));
  }
  if (data.rows() == 0) fail(ErrorCode::InputOutOfRange, "no training vectors");
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double v = data.data()[i];
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::InputOutOfRange, "training value outside [0, 1]");
  }

  Autoencoder model = init_autoencoder(cfg);
  AdadeltaOptimizer opt(model, cfg.optimizer);
  // Separate streams for batch order and dropout masks.
  std::mt19937_64 shuffle_rng(cfg.rng_seed ^ 0x5DEECE66DULL);
  std::mt19937_64 dropout_rng(cfg.rng_seed ^ 0xB5297A4DULL);

  const Eigen::MatrixXd samples = data.transpose();  // one column per sample
  const auto n = static_cast<std::size_t>(samples.cols());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> history;
  history.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, n - start);
      Eigen::MatrixXd batch(samples.rows(), static_cast<Eigen::Index>(len));
      for (std::size_t j = 0; j < len; ++j) {
        batch.col(static_cast<Eigen::Index>(j)) = samples.col(static_cast<Eigen::Index>(order[start + j]));
      }
      const auto res = forward(model, batch, Mode::Train, &dropout_rng);
      epoch_loss += bce_loss(batch, res.reconstruction) * static_cast<double>(len);
      opt.step(model, backward(model, res.cache, batch));
    }
    history.push_back(epoch_loss / static_cast<double>(n));
    for (const auto& l : model.layers()) {
      if (!l.weights.allFinite() || !l.bias.allFinite() || !l.slopes.allFinite()) {
        fail(ErrorCode::Internal, "non-finite parameters after epoch " + std::to_string(epoch + 1));
      }
    }
  }
  model.set_loss_history(std::move(history));
  return model;
}

Eigen::MatrixXd encode(const Autoencoder& model, const Eigen::MatrixXd& data) {
  const auto& layers = model.layers();
  if (static_cast<std::size_t>(data.cols()) != model.config().input_dim()) {
    fail(ErrorCode::DimensionMismatch, "encode input has " + std::to_string(data.cols()) + " columns");
  }
  Eigen::MatrixXd a = data.transpose();
  for (std::size_t l = 0; l <= model.config().code_layer; ++l) {
    Eigen::MatrixXd z = layers[l].weights * a;
    z.colwise() += layers[l].bias;
    a = layers[l].spec.activation == Activation::Sigmoid ? sigmoid(z) : prelu(z, layers[l].slopes);
  }
  return a.transpose();
}

Eigen::VectorXd encode(const Autoencoder& model, const Eigen::VectorXd& x) {
  return encode(model, Eigen::MatrixXd(x.transpose())).row(0).transpose();
}

Eigen::MatrixXd reconstruct(const Autoencoder& model, const Eigen::MatrixXd& data) {
  return forward(model, data.transpose(), Mode::Eval).reconstruction.transpose();
}

namespace {

static_assert(std::endian::native == std::endian::little, "model files are little-endian");

constexpr char kMagic[4] = {'G', 'F', 'A', 'E'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_doubles(std::ostream& os, const double* p, std::size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) fail(ErrorCode::Io, "truncated model file");
  return v;
}

void get_doubles(std::istream& is, double* p, std::size_t n) {
  if (!is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)))) {
    fail(ErrorCode::Io, "truncated model file");
  }
}

}  // namespace

void save_autoencoder(const std::filesystem::path& path, const Autoencoder& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  const auto& cfg = model.config();
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, cfg.rng_seed);
  put<std::uint64_t>(out, cfg.epochs);
  put<std::uint64_t>(out, cfg.batch_size);
  put<double>(out, cfg.optimizer.learning_rate);
  put<double>(out, cfg.optimizer.rho);
  put<double>(out, cfg.optimizer.epsilon);
  put<std::uint64_t>(out, cfg.code_layer);
  put<std::uint64_t>(out, model.layers().size());
  for (const auto& l : model.layers()) {
    put<std::uint64_t>(out, l.spec.fan_in);
    put<std::uint64_t>(out, l.spec.fan_out);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(l.spec.activation));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(l.spec.init));
    put<double>(out, l.spec.dropout_p);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = l.weights;
    put_doubles(out, w.data(), static_cast<std::size_t>(w.size()));
    put_doubles(out, l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    put_doubles(out, l.slopes.data(), static_cast<std::size_t>(l.slopes.size()));
  }
  put<std::uint64_t>(out, model.loss_history().size());
  put_doubles(out, model.loss_history().data(), model.loss_history().size());
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

Autoencoder load_autoencoder(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorCode::SchemaMismatch, path.string() + " is not an autoencoder model");
  }
  if (get<std::uint32_t>(in) != kVersion) fail(ErrorCode::SchemaMismatch, "unsupported model version");
  AutoencoderConfig cfg;
  cfg.rng_seed = get<std::uint64_t>(in);
  cfg.epochs = get<std::uint64_t>(in);
  cfg.batch_size = get<std::uint64_t>(in);
  cfg.optimizer.learning_rate = get<double>(in);
  cfg.optimizer.rho = get<double>(in);
  cfg.optimizer.epsilon = get<double>(in);
  cfg.code_layer = get<std::uint64_t>(in);
  const auto n_layers = get<std::uint64_t>(in);
  if (n_layers == 0 || n_layers > 64) fail(ErrorCode::SchemaMismatch, "implausible layer count");
  std::vector<Layer> layers;
  for (std::uint64_t i = 0; i < n_layers; ++i) {
    Layer l;
    l.spec.fan_in = get<std::uint64_t>(in);
    l.spec.fan_out = get<std::uint64_t>(in);
    const auto act = get<std::uint8_t>(in);
    const auto init = get<std::uint8_t>(in);
    if (act > 1 || init > 1) fail(ErrorCode::SchemaMismatch, "unknown activation or init tag");
    l.spec.activation = static_cast<Activation>(act);
    l.spec.init = static_cast<Init>(init);
    l.spec.dropout_p = get<double>(in);
    if (l.spec.fan_in > (1u << 20) || l.spec.fan_out > (1u << 20)) {
      fail(ErrorCode::SchemaMismatch, "implausible layer size");
    }
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w(
        static_cast<Eigen::Index>(l.spec.fan_out), static_cast<Eigen::Index>(l.spec.fan_in));
    get_doubles(in, w.data(), static_cast<std::size_t>(w.size()));
    l.weights = w;
    l.bias.resize(static_cast<Eigen::Index>(l.spec.fan_out));
    l.slopes.resize(static_cast<Eigen::Index>(l.spec.fan_out));
    get_doubles(in, l.bias.data(), l.spec.fan_out);
    get_doubles(in, l.slopes.data(), l.spec.fan_out);
    cfg.layers.push_back(l.spec);
    layers.push_back(std::move(l));
  }
  const auto n_loss = get<std::uint64_t>(in);
  if (n_loss > (1u << 24)) fail(ErrorCode::SchemaMismatch, "implausible loss history");
  std::vector<double> history(n_loss);
  get_doubles(in, history.data(), n_loss);

  Autoencoder model(cfg);
  model.mutable_layers() = std::move(layers);
  model.set_loss_history(std::move(history));
  return model;
}

}  // namespace genreforge
