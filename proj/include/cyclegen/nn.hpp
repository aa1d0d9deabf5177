/*
 * Copyright (c) 2026, cyclegen contributors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Dense feedforward regression network: forward pass, MSE loss, hand-derived
// reverse-mode gradients, Adam, and a seeded minibatch training loop.
//
// Layer i maps a_{i-1} (width d_{i-1}) to a_i (width d_i) through
//   z_i = W_i^T a_{i-1} + b_i,   a_i = act(z_i)
// where W_i is stored d_{i-1} x d_i. The last layer is linear.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cyclegen/error.hpp"
#include "cyclegen/random.hpp"
#include "cyclegen/types.hpp"

namespace cyclegen::nn {

enum class Activation { relu, tanh };

inline std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

inline Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + std::string(s) + "' (expected relu|tanh)");
}

struct Architecture {
  std::vector<std::size_t> widths;  // [d0, d1, ..., dk]
  Activation activation = Activation::relu;

  Architecture() = default;
  Architecture(std::vector<std::size_t> w, Activation act = Activation::relu)
      : widths(std::move(w)), activation(act) {
    validate();
  }

  void validate() const {
    if (widths.size() < 2) throw ConfigError("architecture needs at least one weight layer");
    for (auto w : widths) {
      if (w == 0) throw ConfigError("architecture widths must be positive");
    }
  }

  /// Number of weight layers.
  std::size_t depth() const { return widths.size() - 1; }
  std::size_t input_dim() const { return widths.front(); }
  std::size_t output_dim() const { return widths.back(); }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

inline std::size_t param_count(const Architecture& arch) {
  std::size_t total = 0;
  for (std::size_t i = 1; i < arch.widths.size(); ++i) {
    total += arch.widths[i - 1] * arch.widths[i] + arch.widths[i];
  }
  return total;
}

struct DenseLayer {
  Eigen::MatrixXd weights;  // fan_in x fan_out
  Eigen::VectorXd bias;     // fan_out

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
           a.bias.size() == b.bias.size() && a.weights == b.weights && a.bias == b.bias;
  }
};

using Gradients = std::vector<DenseLayer>;

struct ModelWeights {
  Architecture arch;
  std::vector<DenseLayer> layers;
  NormStats input_stats;
  NormStats output_stats;
  Parameter parameter = Parameter::voltage;
  Direction direction = Direction::to_discharge;
  std::uint64_t seed = 0;
  int trained_epochs = 0;
  std::optional<double> calibrated_hop_error;

  /// Total number of scalar entries across all matrices and vectors.
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
  }

  bool all_finite() const {
    return std::all_of(layers.begin(), layers.end(), [](const DenseLayer& l) {
      return l.weights.allFinite() && l.bias.allFinite();
    });
  }

  /// Throws ShapeError if any layer disagrees with `arch`.
  void check_shapes() const {
    arch.validate();
    if (layers.size() != arch.depth()) {
      throw ShapeError("model has " + std::to_string(layers.size()) + " layers, architecture expects " +
                       std::to_string(arch.depth()));
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto in = static_cast<Eigen::Index>(arch.widths[i]);
      const auto out = static_cast<Eigen::Index>(arch.widths[i + 1]);
      if (layers[i].weights.rows() != in || layers[i].weights.cols() != out ||
          layers[i].bias.size() != out) {
        throw ShapeError("layer " + std::to_string(i) + " shape disagrees with architecture");
      }
    }
  }

  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

/// Zero-filled gradient/moment buffers shaped like `model`.
inline std::vector<DenseLayer> zeros_like(const ModelWeights& model) {
  std::vector<DenseLayer> out;
  out.reserve(model.layers.size());
  for (const auto& l : model.layers) {
    out.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                   Eigen::VectorXd::Zero(l.bias.size())});
  }
  return out;
}

/// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
inline ModelWeights initialize(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  ModelWeights model;
  model.arch = arch;
  model.seed = seed;
  Rng rng(seed);
  for (std::size_t i = 1; i < arch.widths.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(arch.widths[i - 1]);
    const auto out = static_cast<Eigen::Index>(arch.widths[i]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer{Eigen::MatrixXd(in, out), Eigen::VectorXd::Zero(out)};
    // Column-major fill order is part of the reproducibility contract.
    for (Eigen::Index c = 0; c < out; ++c) {
      for (Eigen::Index r = 0; r < in; ++r) layer.weights(r, c) = rng.uniform(-limit, limit);
    }
    model.layers.push_back(std::move(layer));
  }
  return model;
}

namespace detail {

inline void activate(Activation act, Eigen::MatrixXd& z) {
  if (act == Activation::relu) {
    z = z.cwiseMax(0.0);
  } else {
    z = z.array().tanh().matrix();
  }
}

/// Multiplies `delta` in place by act'(z), given the activated output a = act(z).
inline void scale_by_derivative(Activation act, const Eigen::MatrixXd& activated, Eigen::MatrixXd& delta) {
  if (act == Activation::relu) {
    delta = (activated.array() > 0.0).select(delta, 0.0);
  } else {
    delta.array() *= 1.0 - activated.array().square();
  }
}

/// Returns the activations of every layer; entry 0 is the input batch.
inline std::vector<Eigen::MatrixXd> forward_trace(const ModelWeights& model, const Eigen::MatrixXd& x) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(model.layers.size() + 1);
  acts.push_back(x);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    Eigen::MatrixXd z = layer.weights.transpose() * acts.back();
    z.colwise() += layer.bias;
    if (i + 1 < model.layers.size()) activate(model.arch.activation, z);
    acts.push_back(std::move(z));
  }
  return acts;
}

inline Eigen::MatrixXd to_column(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

/// Batched forward pass; each column of `x` is one sample.
inline Eigen::MatrixXd forward_batch(const ModelWeights& model, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.rows()) != model.arch.input_dim()) {
    throw ShapeError("input has " + std::to_string(x.rows()) + " rows, model expects " +
                     std::to_string(model.arch.input_dim()));
  }
  return detail::forward_trace(model, x).back();
}

inline std::vector<double> forward(const ModelWeights& model, std::span<const double> x) {
  if (x.size() != model.arch.input_dim()) {
    throw ShapeError("input has length " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(model.arch.input_dim()));
  }
  const Eigen::MatrixXd y = forward_batch(model, detail::to_column(x));
  return {y.data(), y.data() + y.size()};
}

/// Minibatch mean-squared error. Always non-negative.
struct LossValue {
  double value = 0.0;
};

inline LossValue loss_mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty()) {
    throw ShapeError("loss_mse needs equal non-zero lengths, got " + std::to_string(pred.size()) +
                     " and " + std::to_string(target.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    sum += d * d;
  }
  return {sum / static_cast<double>(pred.size())};
}

/// Gradients of the mean (over all entries) squared error of a batch.
/// When `loss` is non-null it receives that mean.
inline Gradients backward_batch(const ModelWeights& model, const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& target, double* loss = nullptr) {
  if (static_cast<std::size_t>(x.rows()) != model.arch.input_dim() ||
      static_cast<std::size_t>(target.rows()) != model.arch.output_dim() || x.cols() != target.cols() ||
      x.cols() == 0) {
    throw ShapeError("backward: batch shapes disagree with the architecture");
  }
  const auto acts = detail::forward_trace(model, x);
  const Eigen::MatrixXd residual = acts.back() - target;
  const double count = static_cast<double>(residual.size());
  if (loss != nullptr) *loss = residual.squaredNorm() / count;

  Gradients grads(model.layers.size());
  Eigen::MatrixXd delta = (2.0 / count) * residual;
  for (std::size_t i = model.layers.size(); i-- > 0;) {
    grads[i].weights = acts[i] * delta.transpose();
    grads[i].bias = delta.rowwise().sum();
    if (i > 0) {
      Eigen::MatrixXd upstream = model.layers[i].weights * delta;
      detail::scale_by_derivative(model.arch.activation, acts[i], upstream);
      delta = std::move(upstream);
    }
  }
  return grads;
}

inline Gradients backward(const ModelWeights& model, std::span<const double> x,
                          std::span<const double> target) {
  if (x.size() != model.arch.input_dim() || target.size() != model.arch.output_dim()) {
    throw ShapeError("backward: sample shapes disagree with the architecture");
  }
  return backward_batch(model, detail::to_column(x), detail::to_column(target));
}

struct TrainConfig {
  int epochs = 400;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    // A zero learning rate is accepted so that a run can reproduce its initialization.
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw ConfigError("learning_rate must be finite and >= 0");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  }
};

/// Adam update of a flat parameter block. `step` is the 1-based timestep
/// used for bias correction.
inline void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                        std::span<double> v, std::uint64_t step, const TrainConfig& cfg) {
  if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size()) {
    throw ShapeError("adam_update: buffer sizes disagree");
  }
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

struct AdamState {
  std::vector<DenseLayer> m;
  std::vector<DenseLayer> v;
  std::uint64_t t = 0;

  static AdamState for_model(const ModelWeights& model) { return {zeros_like(model), zeros_like(model), 0}; }
};

namespace detail {
inline std::span<double> flat(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> flat(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<const double> flat(const Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
inline std::span<const double> flat(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
}  // namespace detail

/// One Adam step over every layer. Increments `state.t`.
inline void adam_step(ModelWeights& model, const Gradients& grads, AdamState& state, const TrainConfig& cfg) {
  if (grads.size() != model.layers.size() || state.m.size() != model.layers.size() ||
      state.v.size() != model.layers.size()) {
    throw ShapeError("adam_step: gradient/state layer count disagrees with model");
  }
  for (const auto& g : grads) {
    if (!g.weights.allFinite() || !g.bias.allFinite()) {
      throw DivergenceError("non-finite gradient at Adam step " + std::to_string(state.t + 1));
    }
  }
  ++state.t;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    auto& layer = model.layers[i];
    if (grads[i].weights.rows() != layer.weights.rows() || grads[i].weights.cols() != layer.weights.cols() ||
        grads[i].bias.size() != layer.bias.size()) {
      throw ShapeError("adam_step: gradient shape disagrees with layer " + std::to_string(i));
    }
    adam_update(detail::flat(layer.weights), detail::flat(grads[i].weights), detail::flat(state.m[i].weights),
                detail::flat(state.v[i].weights), state.t, cfg);
    adam_update(detail::flat(layer.bias), detail::flat(grads[i].bias), detail::flat(state.m[i].bias),
                detail::flat(state.v[i].bias), state.t, cfg);
  }
  if (!model.all_finite()) {
    throw DivergenceError("Adam step " + std::to_string(state.t) + " produced non-finite weights");
  }
}

struct TrainResult {
  ModelWeights model;
  std::vector<double> loss_history;  // one entry per epoch
};

/// Trains a fresh network on `pairs`. Initialization, per-epoch shuffling and
/// batching all derive from `cfg.seed`. Each history entry is the mean
/// pre-update minibatch loss over that epoch.
inline TrainResult train(const Architecture& arch, std::span<const AlignedPair> pairs, const TrainConfig& cfg) {
  cfg.validate();
  arch.validate();
  if (pairs.empty()) throw DataError("train: no training pairs");
  for (const auto& p : pairs) {
    if (p.input.size() != arch.input_dim() || p.target.size() != arch.output_dim()) {
      throw ShapeError("train: pair dimensions (" + std::to_string(p.input.size()) + " -> " +
                       std::to_string(p.target.size()) + ") disagree with architecture");
    }
  }

  TrainResult result;
  result.model = initialize(arch, cfg.seed);
  result.model.parameter = pairs.front().parameter;
  result.model.direction = pairs.front().direction;
  result.model.input_stats = pairs.front().stats;
  result.model.output_stats = pairs.front().stats;

  auto& model = result.model;
  AdamState state = AdamState::for_model(model);
  Rng shuffler(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const auto d_in = static_cast<Eigen::Index>(arch.input_dim());
  const auto d_out = static_cast<Eigen::Index>(arch.output_dim());
  result.loss_history.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffler.shuffle(order);
    double weighted = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      Eigen::MatrixXd x(d_in, static_cast<Eigen::Index>(count));
      Eigen::MatrixXd y(d_out, static_cast<Eigen::Index>(count));
      for (std::size_t j = 0; j < count; ++j) {
        const auto& p = pairs[order[start + j]];
        x.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(p.input.data(), d_in);
        y.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(p.target.data(), d_out);
      }
      double loss = 0.0;
      const Gradients grads = backward_batch(model, x, y, &loss);
      if (!std::isfinite(loss)) {
        throw DivergenceError("training diverged (non-finite loss) at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(batch_index));
      }
      try {
        adam_step(model, grads, state, cfg);
      } catch (const DivergenceError& e) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch_index) + ": " + e.what());
      }
      weighted += loss * static_cast<double>(count);
    }
    result.loss_history.push_back(weighted / static_cast<double>(order.size()));
    model.trained_epochs = epoch;
  }
  return result;
}

}  // namespace cyclegen::nn
