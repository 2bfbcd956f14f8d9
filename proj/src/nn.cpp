#include "spectraforge/nn.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "spectraforge/io.hpp"

namespace spectraforge::nn {

const char* to_string(Activation activation) {
  switch (activation) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "linear";
}

Activation activation_from_string(const std::string& name) {
  if (name == "linear") return Activation::linear;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw FormatError("unknown activation '" + name + "'");
}

namespace {

Matrix activate(const Matrix& pre, Activation activation) {
  switch (activation) {
    case Activation::linear: return pre;
    case Activation::relu: return pre.cwiseMax(0.0);
    case Activation::tanh: return pre.array().tanh().matrix();
  }
  return pre;
}

// Derivative expressed through the post-activation value.
Matrix activation_grad(const Matrix& post, Activation activation) {
  switch (activation) {
    case Activation::linear: return Matrix::Ones(post.rows(), post.cols());
    case Activation::relu:
      return (post.array() > 0.0).cast<double>().matrix();
    case Activation::tanh: return (1.0 - post.array().square()).matrix();
  }
  return Matrix::Ones(post.rows(), post.cols());
}

std::vector<const DenseLayer*> layer_stack(const AutoencoderModel& model) {
  std::vector<const DenseLayer*> stack;
  for (const auto& layer : model.encoder) stack.push_back(&layer);
  for (const auto& layer : model.decoder) stack.push_back(&layer);
  return stack;
}

Matrix run_layers(const std::vector<const DenseLayer*>& layers, Matrix activations) {
  for (const auto* layer : layers) {
    if (layer->in_dim() != activations.rows()) {
      throw ShapeError("layer expects " + std::to_string(layer->in_dim()) +
                       " inputs, got " + std::to_string(activations.rows()));
    }
    activations =
        activate((layer->weights * activations).colwise() + layer->bias,
                 layer->activation);
  }
  return activations;
}

}  // namespace

void validate(const AutoencoderModel& model) {
  if (model.encoder.empty() || model.decoder.empty()) {
    throw SpecError("autoencoder needs at least one encoder and one decoder layer");
  }
  Index width = model.encoder.front().in_dim();
  for (const auto& layer : model.encoder) {
    if (layer.in_dim() != width) throw ShapeError("encoder layer widths disagree");
    if (layer.bias.size() != layer.out_dim()) throw ShapeError("bias width mismatch");
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      throw DataError("encoder parameters are non-finite");
    }
    width = layer.out_dim();
  }
  if (width != model.latent_dim) {
    throw ShapeError("encoder output width " + std::to_string(width) +
                     " differs from latent_dim " + std::to_string(model.latent_dim));
  }
  for (const auto& layer : model.decoder) {
    if (layer.in_dim() != width) throw ShapeError("decoder layer widths disagree");
    if (layer.bias.size() != layer.out_dim()) throw ShapeError("bias width mismatch");
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      throw DataError("decoder parameters are non-finite");
    }
    width = layer.out_dim();
  }
  if (width != model.input_dim()) {
    throw ShapeError("decoder output width " + std::to_string(width) +
                     " differs from input width " + std::to_string(model.input_dim()));
  }
}

AutoencoderModel make_autoencoder(Index input_dim, Index latent_dim,
                                  const ModelConfig& config, Rng& rng) {
  if (input_dim < 1 || latent_dim < 1) {
    throw SpecError("input_dim and latent_dim must be at least 1");
  }
  auto init_layer = [&rng](Index in, Index out, Activation activation) {
    DenseLayer layer;
    layer.activation = activation;
    layer.weights.resize(out, in);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (Index r = 0; r < out; ++r)
      for (Index c = 0; c < in; ++c) layer.weights(r, c) = rng.uniform(-bound, bound);
    layer.bias = Vector::Zero(out);
    return layer;
  };

  std::vector<Index> widths;
  widths.push_back(input_dim);
  for (Index h : config.hidden) {
    if (h < 1) throw SpecError("hidden widths must be at least 1");
    widths.push_back(h);
  }
  widths.push_back(latent_dim);

  AutoencoderModel model;
  model.latent_dim = latent_dim;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    model.encoder.push_back(init_layer(widths[i], widths[i + 1],
                                       last ? Activation::linear
                                            : config.hidden_activation));
  }
  for (std::size_t i = widths.size() - 1; i > 0; --i) {
    const bool last = i == 1;
    model.decoder.push_back(init_layer(widths[i], widths[i - 1],
                                       last ? Activation::linear
                                            : config.hidden_activation));
  }
  validate(model);
  return model;
}

ForwardResult forward(const AutoencoderModel& model, const Vector& input) {
  if (input.size() != model.input_dim()) {
    throw ShapeError("forward: input length " + std::to_string(input.size()) +
                     ", model expects " + std::to_string(model.input_dim()));
  }
  const Matrix latent = encode_batch(model, input);
  const Matrix reconstruction = decode_batch(model, latent);
  ForwardResult result;
  result.latent = latent.col(0);
  result.reconstruction = reconstruction.col(0);
  return result;
}

Matrix encode_batch(const AutoencoderModel& model, const Matrix& inputs) {
  std::vector<const DenseLayer*> layers;
  for (const auto& layer : model.encoder) layers.push_back(&layer);
  return run_layers(layers, inputs);
}

Matrix decode_batch(const AutoencoderModel& model, const Matrix& latents) {
  std::vector<const DenseLayer*> layers;
  for (const auto& layer : model.decoder) layers.push_back(&layer);
  return run_layers(layers, latents);
}

double mse(const Matrix& inputs, const Matrix& reconstructions) {
  if (inputs.rows() != reconstructions.rows() ||
      inputs.cols() != reconstructions.cols()) {
    throw ShapeError("mse: shape mismatch");
  }
  if (inputs.size() == 0) throw SpecError("mse: empty input");
  return (inputs - reconstructions).squaredNorm() /
         static_cast<double>(inputs.size());
}

double mse(const std::vector<Vector>& inputs,
           const std::vector<Vector>& reconstructions) {
  if (inputs.size() != reconstructions.size()) throw ShapeError("mse: count mismatch");
  if (inputs.empty()) throw SpecError("mse: empty input");
  double sum = 0.0;
  std::size_t elements = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != reconstructions[i].size()) {
      throw ShapeError("mse: length mismatch at record " + std::to_string(i));
    }
    sum += (inputs[i] - reconstructions[i]).squaredNorm();
    elements += static_cast<std::size_t>(inputs[i].size());
  }
  if (elements == 0) throw SpecError("mse: zero-length records");
  return sum / static_cast<double>(elements);
}

BackwardResult backward(const AutoencoderModel& model, const Matrix& batch) {
  if (batch.cols() < 1) throw SpecError("backward: empty batch");
  if (batch.rows() != model.input_dim()) {
    throw ShapeError("backward: batch rows " + std::to_string(batch.rows()) +
                     ", model expects " + std::to_string(model.input_dim()));
  }

  const auto layers = layer_stack(model);
  const std::size_t count = layers.size();

  // Forward pass with cached post-activations; index 0 is the input batch.
  std::vector<Matrix> post(count + 1);
  post[0] = batch;
  for (std::size_t k = 0; k < count; ++k) {
    post[k + 1] = activate((layers[k]->weights * post[k]).colwise() + layers[k]->bias,
                           layers[k]->activation);
    if (!post[k + 1].allFinite()) {
      throw NumericsError("non-finite activation in layer " + std::to_string(k));
    }
  }

  const double scale = static_cast<double>(batch.size());
  BackwardResult result;
  result.loss = (post[count] - batch).squaredNorm() / scale;

  result.gradients.weights.resize(count);
  result.gradients.bias.resize(count);

  Matrix delta = activation_grad(post[count], layers[count - 1]->activation)
                     .cwiseProduct((post[count] - batch) * (2.0 / scale));
  for (std::size_t k = count; k-- > 0;) {
    result.gradients.weights[k] = delta * post[k].transpose();
    result.gradients.bias[k] = delta.rowwise().sum();
    if (k > 0) {
      delta = activation_grad(post[k], layers[k - 1]->activation)
                  .cwiseProduct(layers[k]->weights.transpose() * delta);
    }
  }
  return result;
}

AdamState make_adam(const AutoencoderModel& model, double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  const auto layers = layer_stack(model);
  for (const auto* layer : layers) {
    state.m_weights.push_back(Matrix::Zero(layer->out_dim(), layer->in_dim()));
    state.v_weights.push_back(Matrix::Zero(layer->out_dim(), layer->in_dim()));
    state.m_bias.push_back(Vector::Zero(layer->out_dim()));
    state.v_bias.push_back(Vector::Zero(layer->out_dim()));
  }
  return state;
}

void adam_step(AdamState& state, AutoencoderModel& model, const Gradients& gradients) {
  std::vector<DenseLayer*> layers;
  for (auto& layer : model.encoder) layers.push_back(&layer);
  for (auto& layer : model.decoder) layers.push_back(&layer);
  if (layers.size() != gradients.weights.size() ||
      layers.size() != state.m_weights.size()) {
    throw ShapeError("adam_step: state/gradient layer counts disagree");
  }

  state.step += 1;
  const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto& mw = state.m_weights[k];
    auto& vw = state.v_weights[k];
    mw = state.beta1 * mw + (1.0 - state.beta1) * gradients.weights[k];
    vw = (state.beta2 * vw.array() +
          (1.0 - state.beta2) * gradients.weights[k].array().square())
             .matrix();
    layers[k]->weights.array() -=
        state.learning_rate * (mw.array() / bias1) /
        ((vw.array() / bias2).sqrt() + state.epsilon);

    auto& mb = state.m_bias[k];
    auto& vb = state.v_bias[k];
    mb = state.beta1 * mb + (1.0 - state.beta1) * gradients.bias[k];
    vb = (state.beta2 * vb.array() +
          (1.0 - state.beta2) * gradients.bias[k].array().square())
             .matrix();
    layers[k]->bias.array() -= state.learning_rate * (mb.array() / bias1) /
                               ((vb.array() / bias2).sqrt() + state.epsilon);
  }
}

double PlateauScheduler::observe(double val_loss, double current_lr) {
  if (best_loss - val_loss > threshold) {
    best_loss = val_loss;
    stalled = 0;
    return current_lr;
  }
  if (++stalled >= patience) {
    stalled = 0;
    return std::max(min_lr, current_lr * factor);
  }
  return current_lr;
}

namespace {

Matrix gather_columns(const std::vector<Vector>& series,
                      const std::vector<std::size_t>& indices, std::size_t begin,
                      std::size_t end) {
  Matrix batch(series.front().size(), static_cast<Index>(end - begin));
  for (std::size_t i = begin; i < end; ++i) {
    batch.col(static_cast<Index>(i - begin)) = series[indices[i]];
  }
  return batch;
}

double evaluate(const AutoencoderModel& model, const std::vector<Vector>& series) {
  double sum = 0.0;
  std::size_t elements = 0;
  const std::size_t chunk = 256;
  for (std::size_t begin = 0; begin < series.size(); begin += chunk) {
    const std::size_t end = std::min(series.size(), begin + chunk);
    Matrix batch(series.front().size(), static_cast<Index>(end - begin));
    for (std::size_t i = begin; i < end; ++i) {
      batch.col(static_cast<Index>(i - begin)) = series[i];
    }
    const Matrix reconstruction = decode_batch(model, encode_batch(model, batch));
    sum += (reconstruction - batch).squaredNorm();
    elements += static_cast<std::size_t>(batch.size());
  }
  return sum / static_cast<double>(elements);
}

}  // namespace

TrainHistory train(AutoencoderModel& model, const std::vector<Vector>& train_series,
                   const std::vector<Vector>& val_series, const TrainConfig& cfg) {
  validate(model);
  if (cfg.epochs < 1) throw SpecError("train: epochs must be at least 1");
  if (cfg.batch_size < 1) throw SpecError("train: batch_size must be at least 1");
  if (train_series.empty() || val_series.empty()) {
    throw SpecError("train: training and validation series must be non-empty");
  }
  const Index input_dim = model.input_dim();
  for (const auto& series : train_series) {
    if (series.size() != input_dim) throw ShapeError("train: series length mismatch");
  }
  for (const auto& series : val_series) {
    if (series.size() != input_dim) throw ShapeError("train: series length mismatch");
  }

  Rng rng(cfg.seed);
  AdamState adam = make_adam(model, cfg.learning_rate);
  PlateauScheduler scheduler;
  scheduler.patience = cfg.plateau_patience;
  scheduler.factor = cfg.plateau_factor;
  scheduler.min_lr = cfg.min_lr;
  scheduler.threshold = cfg.plateau_threshold;

  TrainHistory history;
  AutoencoderModel best_model = model;
  double lr = cfg.learning_rate;

  std::vector<std::size_t> order(train_series.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    adam.learning_rate = lr;

    double epoch_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const Matrix batch = gather_columns(train_series, order, begin, end);
      BackwardResult step = backward(model, batch);
      epoch_sum += step.loss * static_cast<double>(end - begin);
      adam_step(adam, model, step.gradients);
    }
    history.train_loss.push_back(epoch_sum / static_cast<double>(order.size()));

    const double val_loss = evaluate(model, val_series);
    if (!std::isfinite(val_loss)) {
      throw DivergedError("validation loss became non-finite at epoch " +
                          std::to_string(epoch));
    }
    history.val_loss.push_back(val_loss);
    history.learning_rate.push_back(lr);

    if (val_loss < history.best_val_loss) {
      history.best_val_loss = val_loss;
      history.best_epoch = epoch;
      best_model = model;
    }
    lr = scheduler.observe(val_loss, lr);
  }

  model = std::move(best_model);
  return history;
}

void save_model(const AutoencoderModel& model, const std::filesystem::path& path) {
  validate(model);
  nlohmann::json header;
  header["format"] = "spectraforge.model";
  header["version"] = 1;
  header["latent_dim"] = model.latent_dim;
  auto describe = [](const std::vector<DenseLayer>& layers) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& layer : layers) {
      list.push_back({{"in", layer.in_dim()},
                      {"out", layer.out_dim()},
                      {"activation", to_string(layer.activation)}});
    }
    return list;
  };
  header["encoder"] = describe(model.encoder);
  header["decoder"] = describe(model.decoder);

  std::vector<Matrix> blocks;
  for (const auto& layer : model.encoder) {
    blocks.push_back(layer.weights);
    blocks.push_back(layer.bias);
  }
  for (const auto& layer : model.decoder) {
    blocks.push_back(layer.weights);
    blocks.push_back(layer.bias);
  }
  write_blob(path, header, blocks);
}

AutoencoderModel load_model(const std::filesystem::path& path) {
  auto [header, blocks] = read_blob(path);
  if (header.value("format", std::string()) != "spectraforge.model") {
    throw FormatError(path.string() + ": not a model checkpoint");
  }
  AutoencoderModel model;
  model.latent_dim = header.at("latent_dim").get<Index>();
  std::size_t block = 0;
  auto restore = [&](const nlohmann::json& list) {
    std::vector<DenseLayer> layers;
    for (const auto& item : list) {
      if (block + 2 > blocks.size()) {
        throw FormatError(path.string() + ": missing weight blocks");
      }
      DenseLayer layer;
      layer.weights = blocks.at(block++);
      layer.bias = blocks.at(block++).col(0);
      layer.activation = activation_from_string(item.at("activation"));
      if (layer.in_dim() != item.at("in").get<Index>() ||
          layer.out_dim() != item.at("out").get<Index>()) {
        throw FormatError(path.string() + ": weight block shape disagrees with header");
      }
      layers.push_back(std::move(layer));
    }
    return layers;
  };
  model.encoder = restore(header.at("encoder"));
  model.decoder = restore(header.at("decoder"));
  if (block != blocks.size()) {
    throw FormatError(path.string() + ": unexpected trailing weight blocks");
  }
  validate(model);
  return model;
}

}  // namespace spectraforge::nn
