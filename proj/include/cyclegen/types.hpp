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

// Domain vocabulary shared by every module.

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cyclegen/error.hpp"

namespace cyclegen {

enum class Parameter { voltage, soc, temperature };
enum class Phase { charge, discharge };

/// Which network a pair trains. to_charge pairs feed ChargeNet
/// (discharge profile in, next charge profile out); to_discharge pairs feed
/// DischargeNet (charge profile in, same-cycle discharge profile out).
enum class Direction { to_charge, to_discharge };

inline constexpr std::array<Parameter, 3> kAllParameters{Parameter::voltage, Parameter::soc,
                                                         Parameter::temperature};

inline std::string_view to_string(Parameter p) {
  switch (p) {
    case Parameter::voltage: return "voltage";
    case Parameter::soc: return "soc";
    case Parameter::temperature: return "temperature";
  }
  return "?";
}

inline std::string_view to_string(Phase p) { return p == Phase::charge ? "charge" : "discharge"; }

/// Model-file spelling: a net is named after the phase it produces.
inline std::string_view to_string(Direction d) {
  return d == Direction::to_charge ? "charge" : "discharge";
}

inline Parameter parse_parameter(std::string_view s) {
  if (s == "voltage") return Parameter::voltage;
  if (s == "soc") return Parameter::soc;
  if (s == "temperature") return Parameter::temperature;
  throw ConfigError("unknown parameter '" + std::string(s) + "' (expected voltage|soc|temperature)");
}

inline Phase parse_phase(std::string_view s) {
  if (s == "charge") return Phase::charge;
  if (s == "discharge") return Phase::discharge;
  throw DataError("unknown phase '" + std::string(s) + "' (expected charge|discharge)");
}

inline Direction parse_direction(std::string_view s) {
  if (s == "charge") return Direction::to_charge;
  if (s == "discharge") return Direction::to_discharge;
  throw ConfigError("unknown direction '" + std::string(s) + "' (expected charge|discharge)");
}

inline Phase opposite(Phase p) { return p == Phase::charge ? Phase::discharge : Phase::charge; }

/// The phase a net of this direction produces.
inline Phase produced_phase(Direction d) {
  return d == Direction::to_charge ? Phase::charge : Phase::discharge;
}

/// Min/max scaling statistics for one parameter, taken from training data.
struct NormStats {
  double min = 0.0;
  double max = 1.0;

  void validate() const {
    if (!std::isfinite(min) || !std::isfinite(max) || !(max > min)) {
      throw DataError("degenerate normalization stats: min=" + std::to_string(min) +
                      " max=" + std::to_string(max));
    }
  }

  double normalize(double v) const { return (v - min) / (max - min); }
  double denormalize(double u) const { return min + u * (max - min); }

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// One fixed-length training example for a single network direction.
struct AlignedPair {
  std::vector<double> input;
  std::vector<double> target;
  Parameter parameter = Parameter::voltage;
  Direction direction = Direction::to_discharge;
  std::string cell_id;
  int input_cycle = 0;
  int target_cycle = 0;
  NormStats stats;
};

}  // namespace cyclegen
