#pragma once

#include <filesystem>
#include <vector>

#include "spectraforge/rng.hpp"
#include "spectraforge/types.hpp"

namespace spectraforge::nn {

enum class Activation { linear, relu, tanh };

const char* to_string(Activation activation);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::linear;

  Index in_dim() const { return weights.cols(); }
  Index out_dim() const { return weights.rows(); }
};

// Dense autoencoder; encoder maps R^L -> R^d, decoder mirrors it back.
struct AutoencoderModel {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;
  Index latent_dim = 0;

  Index input_dim() const {
    return encoder.empty() ? 0 : encoder.front().in_dim();
  }
};

void validate(const AutoencoderModel& model);

// Hidden widths between input and bottleneck; the decoder mirrors them.
struct ModelConfig {
  std::vector<Index> hidden = {256, 64};
  Activation hidden_activation = Activation::relu;
};

// Uniform fan-in init (U(-1/sqrt(in), 1/sqrt(in))), biases zero.
AutoencoderModel make_autoencoder(Index input_dim, Index latent_dim,
                                  const ModelConfig& config, Rng& rng);

struct ForwardResult {
  Vector latent;
  Vector reconstruction;
};

ForwardResult forward(const AutoencoderModel& model, const Vector& input);

// Batch variants; columns are samples.
Matrix encode_batch(const AutoencoderModel& model, const Matrix& inputs);
Matrix decode_batch(const AutoencoderModel& model, const Matrix& latents);

// Mean squared error averaged over records and elements.
double mse(const Matrix& inputs, const Matrix& reconstructions);
double mse(const std::vector<Vector>& inputs, const std::vector<Vector>& reconstructions);

// Encoder gradients first, then decoder gradients, layer order preserved.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;
};

struct BackwardResult {
  Gradients gradients;
  double loss = 0.0;
};

// Gradient of the reconstruction MSE over the batch w.r.t. every parameter.
BackwardResult backward(const AutoencoderModel& model, const Matrix& batch);

struct AdamState {
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 0.0005;
  std::vector<Matrix> m_weights, v_weights;
  std::vector<Vector> m_bias, v_bias;
};

AdamState make_adam(const AutoencoderModel& model, double learning_rate);

// One bias-corrected Adam update, in place.
void adam_step(AdamState& state, AutoencoderModel& model, const Gradients& gradients);

// Reduce-on-plateau: after `patience` epochs without an absolute improvement
// above `threshold`, the learning rate is multiplied by `factor` (never
// below min_lr, never increased).
struct PlateauScheduler {
  int patience = 10;
  double factor = 0.5;
  double min_lr = 1e-6;
  double threshold = 1e-5;

  double best_loss = std::numeric_limits<double>::infinity();
  int stalled = 0;

  double observe(double val_loss, double current_lr);
};

struct TrainConfig {
  int epochs = 150;
  double learning_rate = 0.0005;
  int batch_size = 32;
  std::uint64_t seed = 0;
  int plateau_patience = 10;
  double plateau_factor = 0.5;
  double min_lr = 1e-6;
  double plateau_threshold = 1e-5;
  ModelConfig model;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> learning_rate;
  int best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::infinity();
};

// Minibatch Adam for cfg.epochs epochs with per-epoch seeded shuffling and a
// plateau schedule on the validation loss. The model is left at the best
// validation epoch's parameters.
TrainHistory train(AutoencoderModel& model, const std::vector<Vector>& train_series,
                   const std::vector<Vector>& val_series, const TrainConfig& cfg);

void save_model(const AutoencoderModel& model, const std::filesystem::path& path);
AutoencoderModel load_model(const std::filesystem::path& path);

}  // namespace spectraforge::nn
