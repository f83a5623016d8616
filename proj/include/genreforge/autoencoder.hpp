#pragma once

// Dense autoencoder with PReLU hidden layers, sigmoid output, BCE loss,
// inverted dropout and Adadelta training.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

namespace genreforge {

enum class Activation : std::uint8_t { PReLU = 0, Sigmoid = 1 };
enum class Init : std::uint8_t { HeNormal = 0, HeUniform = 1 };

struct LayerSpec {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  Activation activation = Activation::PReLU;
  double dropout_p = 0.0;
  Init init = Init::HeNormal;
};

struct AdadeltaConfig {
  double learning_rate = 1.0;
  double rho = 0.95;
  double epsilon = 1e-8;
};

struct AutoencoderConfig {
  std::vector<LayerSpec> layers;
  std::size_t code_layer = 1;  // h is this layer's post-activation output
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  AdadeltaConfig optimizer;
  std::uint64_t rng_seed = 1;

  /// input -> hidden (drop) -> code (drop) -> hidden -> input, sigmoid output.
  static AutoencoderConfig standard(std::size_t input_dim, std::size_t hidden = 60,
                                    std::size_t code = 20, double dropout = 0.2);

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().fan_in; }
  std::size_t code_dim() const { return layers.at(code_layer).fan_out; }

  /// Throws InvalidConfig unless the stack is dimension-consistent.
  void validate() const;
};

struct Layer {
  LayerSpec spec;
  Eigen::MatrixXd weights;  // fan_out x fan_in
  Eigen::VectorXd bias;
  Eigen::VectorXd slopes;   // PReLU negative-side slope per unit (unused for sigmoid)
};

class Autoencoder {
 public:
  Autoencoder() = default;
  explicit Autoencoder(AutoencoderConfig cfg);

  const AutoencoderConfig& config() const { return cfg_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() {
    ++generation_;
    return layers_;
  }
  const std::vector<double>& loss_history() const { return loss_history_; }
  void set_loss_history(std::vector<double> h) { loss_history_ = std::move(h); }

  std::uint64_t generation() const { return generation_; }
  void touch() { ++generation_; }

  /// Every trainable value, block by block: W, b, slopes per layer.
  std::vector<std::span<double>> parameter_blocks();
  std::size_t parameter_count() const;

 private:
  AutoencoderConfig cfg_;
  std::vector<Layer> layers_;
  std::vector<double> loss_history_;
  std::uint64_t generation_ = 0;
};

/// Weights drawn per `spec.init`; biases are zero, PReLU slopes 0.25.
Layer he_init(const LayerSpec& spec, std::mt19937_64& rng);

/// Fresh model with He-initialised layers drawn from `cfg.rng_seed`.
Autoencoder init_autoencoder(const AutoencoderConfig& cfg);

enum class Mode { Train, Eval };

struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;       // activation entering layer l
  std::vector<Eigen::MatrixXd> pre;          // Z_l
  std::vector<Eigen::MatrixXd> masks;        // scaled keep masks, empty when no dropout
  Eigen::MatrixXd output;
  std::uint64_t generation = 0;
  bool valid = false;
};

struct ForwardResult {
  Eigen::MatrixXd code;            // code_dim x batch
  Eigen::MatrixXd reconstruction;  // input_dim x batch
  ForwardCache cache;
};

/// Columns of `x` are samples. `rng` is required in Train mode.
ForwardResult forward(const Autoencoder& model, const Eigen::MatrixXd& x, Mode mode,
                      std::mt19937_64* rng = nullptr);

inline constexpr double kBceClamp = 1e-7;

/// Mean elementwise binary cross-entropy (natural log), x' clamped to [1e-7, 1-1e-7].
double bce_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& reconstruction);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
  std::vector<Eigen::VectorXd> slopes;

  std::vector<std::span<const double>> blocks() const;
};

/// Exact gradient of bce_loss w.r.t. every parameter, given a cache from `forward`.
Gradients backward(const Autoencoder& model, const ForwardCache& cache, const Eigen::MatrixXd& x);

/// Gradient w.r.t. the output layer's pre-activation for a cached pass.
Eigen::MatrixXd output_delta(const ForwardCache& cache, const Eigen::MatrixXd& x);

/// Accumulators for one parameter block.
struct AdadeltaAccumulators {
  std::vector<double> mean_sq_grad;
  std::vector<double> mean_sq_update;
};

/// One Adadelta update of `params` in place.
void adadelta_update(std::span<double> params, std::span<const double> grads,
                     AdadeltaAccumulators& acc, const AdadeltaConfig& cfg);

class AdadeltaOptimizer {
 public:
  AdadeltaOptimizer(const Autoencoder& model, AdadeltaConfig cfg);
  void step(Autoencoder& model, const Gradients& grads);

 private:
  AdadeltaConfig cfg_;
  std::vector<AdadeltaAccumulators> state_;
};

/// Rows of `data` are samples with every value in [0, 1].
Autoencoder train_autoencoder(const Eigen::MatrixXd& data, const AutoencoderConfig& cfg);

/// Minibatches per epoch for `n` samples.
std::size_t batches_per_epoch(std::size_t n, std::size_t batch_size);

/// Bottleneck activations (eval mode), one row per row of `data`.
Eigen::MatrixXd encode(const Autoencoder& model, const Eigen::MatrixXd& data);
Eigen::VectorXd encode(const Autoencoder& model, const Eigen::VectorXd& x);

/// Eval-mode reconstruction, one row per row of `data`.
Eigen::MatrixXd reconstruct(const Autoencoder& model, const Eigen::MatrixXd& data);

void save_autoencoder(const std::filesystem::path& path, const Autoencoder& model);
Autoencoder load_autoencoder(const std::filesystem::path& path);

}  // namespace genreforge
