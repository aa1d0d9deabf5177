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

// JSON model and architecture files. Doubles are written in shortest
// round-trip form, so save followed by load reproduces every finite value.

#include <nlohmann/json.hpp>

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "cyclegen/error.hpp"
#include "cyclegen/nn.hpp"
#include "cyclegen/types.hpp"

namespace cyclegen::io {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json stats_to_json(const NormStats& s) { return {{"min", s.min}, {"max", s.max}}; }

inline NormStats stats_from_json(const nlohmann::json& j) {
  NormStats s{j.at("min").get<double>(), j.at("max").get<double>()};
  s.validate();
  return s;
}

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

inline nlohmann::json architecture_to_json(const nn::Architecture& arch) {
  return {{"widths", arch.widths}, {"activation", nn::to_string(arch.activation)}};
}

inline nn::Architecture architecture_from_json(const nlohmann::json& j) {
  return detail::guarded("architecture file", [&] {
    try {
      return nn::Architecture(j.at("widths").get<std::vector<std::size_t>>(),
                              nn::parse_activation(j.at("activation").get<std::string>()));
    } catch (const ConfigError& e) {
      throw DataError(std::string("architecture file: ") + e.what());
    }
  });
}

inline nlohmann::json model_to_json(const nn::ModelWeights& model) {
  model.check_shapes();
  if (!model.all_finite()) throw DataError("refusing to serialize a model with non-finite weights");
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : model.layers) {
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) row.push_back(layer.weights(r, c));
      w.push_back(std::move(row));
    }
    nlohmann::json b = nlohmann::json::array();
    for (Eigen::Index c = 0; c < layer.bias.size(); ++c) b.push_back(layer.bias(c));
    layers.push_back({{"W", std::move(w)}, {"b", std::move(b)}});
  }
  nlohmann::json j = {
      {"format_version", kModelFormatVersion},
      {"parameter", to_string(model.parameter)},
      {"direction", to_string(model.direction)},
      {"widths", model.arch.widths},
      {"activation", nn::to_string(model.arch.activation)},
      {"seed", model.seed},
      {"trained_epochs", model.trained_epochs},
      {"norm_stats", {{"input", detail::stats_to_json(model.input_stats)},
                      {"output", detail::stats_to_json(model.output_stats)}}},
      {"layers", std::move(layers)},
  };
  if (model.calibrated_hop_error) j["calibrated_hop_error"] = *model.calibrated_hop_error;
  return j;
}

inline nn::ModelWeights model_from_json(const nlohmann::json& j) {
  return detail::guarded("model file", [&] {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("model file: unsupported format_version " + std::to_string(version));
    }
    nn::ModelWeights model;
    try {
      model.arch = nn::Architecture(j.at("widths").get<std::vector<std::size_t>>(),
                                    nn::parse_activation(j.at("activation").get<std::string>()));
      model.parameter = parse_parameter(j.at("parameter").get<std::string>());
      model.direction = parse_direction(j.at("direction").get<std::string>());
    } catch (const ConfigError& e) {
      throw DataError(std::string("model file: ") + e.what());
    }
    model.seed = j.at("seed").get<std::uint64_t>();
    model.trained_epochs = j.at("trained_epochs").get<int>();
    model.input_stats = detail::stats_from_json(j.at("norm_stats").at("input"));
    model.output_stats = detail::stats_from_json(j.at("norm_stats").at("output"));
    if (j.contains("calibrated_hop_error")) {
      model.calibrated_hop_error = j.at("calibrated_hop_error").get<double>();
    }
    const auto& layers = j.at("layers");
    if (layers.size() != model.arch.depth()) throw ShapeError("model file: layer count disagrees with widths");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto rows = static_cast<Eigen::Index>(model.arch.widths[i]);
      const auto cols = static_cast<Eigen::Index>(model.arch.widths[i + 1]);
      const auto& w = layers[i].at("W");
      const auto& b = layers[i].at("b");
      if (static_cast<Eigen::Index>(w.size()) != rows || static_cast<Eigen::Index>(b.size()) != cols) {
        throw ShapeError("model file: layer " + std::to_string(i) + " shape disagrees with widths");
      }
      nn::DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(cols)};
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = w[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != cols) {
          throw ShapeError("model file: ragged weight row in layer " + std::to_string(i));
        }
        for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
      for (Eigen::Index c = 0; c < cols; ++c) layer.bias(c) = b[static_cast<std::size_t>(c)].get<double>();
      model.layers.push_back(std::move(layer));
    }
    if (!model.all_finite()) throw DataError("model file: non-finite weights");
    return model;
  });
}

inline void save_model(const nn::ModelWeights& model, std::ostream& out) { out << model_to_json(model).dump(1) << '\n'; }

inline nn::ModelWeights load_model(std::istream& in) {
  return model_from_json(detail::guarded("model file", [&] { return nlohmann::json::parse(in); }));
}

}  // namespace cyclegen::io
