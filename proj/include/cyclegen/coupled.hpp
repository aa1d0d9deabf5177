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

// ChargeNet/DischargeNet coupling. DischargeNet maps a cycle's charge profile
// to that cycle's discharge profile; ChargeNet maps a discharge profile to the
// next cycle's charge profile. Alternating the two walks forward through cycle
// life, one phase per hop.

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cyclegen/dataset.hpp"
#include "cyclegen/error.hpp"
#include "cyclegen/metrics.hpp"
#include "cyclegen/nn.hpp"
#include "cyclegen/types.hpp"

namespace cyclegen::coupled {

struct CoupledModel {
  nn::ModelWeights charge_net;     // to_charge
  nn::ModelWeights discharge_net;  // to_discharge
  Parameter parameter = Parameter::voltage;
  std::optional<double> calibrated_hop_error;

  CoupledModel() = default;
  CoupledModel(nn::ModelWeights charge, nn::ModelWeights discharge)
      : charge_net(std::move(charge)), discharge_net(std::move(discharge)), parameter(charge_net.parameter) {
    validate();
    // Either file may carry the calibration; they are written together.
    calibrated_hop_error = charge_net.calibrated_hop_error ? charge_net.calibrated_hop_error
                                                           : discharge_net.calibrated_hop_error;
  }

  void validate() const {
    charge_net.check_shapes();
    discharge_net.check_shapes();
    if (charge_net.direction != Direction::to_charge || discharge_net.direction != Direction::to_discharge) {
      throw ConfigError("coupled model: nets are not a ChargeNet/DischargeNet pair");
    }
    if (charge_net.parameter != discharge_net.parameter) {
      throw ConfigError("coupled model: nets were trained on different parameters");
    }
    if (charge_net.arch.input_dim() != charge_net.arch.output_dim() ||
        discharge_net.arch.input_dim() != discharge_net.arch.output_dim() ||
        charge_net.arch.input_dim() != discharge_net.arch.input_dim()) {
      throw ShapeError("coupled model: both nets must map length L to length L");
    }
    if (charge_net.input_stats != discharge_net.input_stats ||
        charge_net.output_stats != discharge_net.output_stats ||
        charge_net.input_stats != charge_net.output_stats) {
      throw DataError("coupled model: nets disagree on normalization stats");
    }
  }

  std::size_t length() const { return charge_net.arch.input_dim(); }
  const NormStats& stats() const { return charge_net.input_stats; }
  const nn::ModelWeights& net_for(Direction d) const {
    return d == Direction::to_charge ? charge_net : discharge_net;
  }

  /// Records the calibration on the model and on both nets (so it persists
  /// with the model files).
  void set_hop_error(double e) {
    calibrated_hop_error = e;
    charge_net.calibrated_hop_error = e;
    discharge_net.calibrated_hop_error = e;
  }
};

struct Hop {
  std::vector<double> values;  // normalized, length L
  Phase phase = Phase::charge;
};

/// A charge input yields a discharge output and vice versa.
inline Hop predict_hop(const CoupledModel& model, std::span<const double> profile, Phase current_phase) {
  if (profile.size() != model.length()) {
    throw ShapeError("predict_hop: profile has length " + std::to_string(profile.size()) + ", model expects " +
                     std::to_string(model.length()));
  }
  const Direction d = current_phase == Phase::charge ? Direction::to_discharge : Direction::to_charge;
  return {nn::forward(model.net_for(d), profile), opposite(current_phase)};
}

/// Mean per-pair RMSE (normalized units) over validation pairs of both
/// directions. Stores the result on `model`.
inline double calibrate_hop_error(CoupledModel& model, std::span<const AlignedPair> validation) {
  std::size_t counts[2] = {0, 0};
  double sum = 0.0;
  for (const auto& p : validation) {
    const auto pred = nn::forward(model.net_for(p.direction), p.input);
    sum += metrics::rmse(pred, p.target);
    ++counts[p.direction == Direction::to_charge ? 0 : 1];
  }
  if (counts[0] == 0 || counts[1] == 0) {
    throw DataError("calibrate_hop_error: need at least one validation pair per direction");
  }
  const double e = sum / static_cast<double>(validation.size());
  model.set_hop_error(e);
  return e;
}

struct PhysicalBounds {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Voltage [2.0, 4.5] V, SOC [-5, 105] %, temperature within the training
/// range widened by 5 C.
inline PhysicalBounds default_bounds(Parameter p, const NormStats& stats) {
  switch (p) {
    case Parameter::voltage: return {data::kVoltageFloor, data::kVoltageCeiling};
    case Parameter::soc: return {-5.0, 105.0};
    case Parameter::temperature: return {stats.min - 5.0, stats.max + 5.0};
  }
  return {};
}

enum class StopReason { threshold_exceeded, max_hops, bound_violation };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::threshold_exceeded: return "threshold_exceeded";
    case StopReason::max_hops: return "max_hops";
    case StopReason::bound_violation: return "bound_violation";
  }
  return "?";
}

struct GenerationChain {
  data::PhaseProfile seed_profile;  // normalized, length L
  std::vector<Hop> hops;
  double accumulated_error = 0.0;
  double hop_error = 0.0;
  StopReason stop_reason = StopReason::max_hops;
};

/// Alternately applies the two nets starting from `seed`. Accumulated error
/// after k hops is k * calibrated_hop_error. Stops before a hop that would
/// push the accumulated error past `threshold` (a zero threshold admits no
/// hops), after `max_hops`, or before keeping a hop whose denormalized values
/// leave `bounds`.
inline GenerationChain generate_chain(const CoupledModel& model, const data::PhaseProfile& seed, double threshold,
                                      int max_hops, std::optional<PhysicalBounds> bounds = std::nullopt) {
  if (!model.calibrated_hop_error) throw ConfigError("generate_chain: model has no calibrated hop error");
  if (!(threshold >= 0.0)) throw ConfigError("generate_chain: threshold must be >= 0");
  if (max_hops < 0) throw ConfigError("generate_chain: max_hops must be >= 0");
  if (seed.values.size() != model.length()) {
    throw ShapeError("generate_chain: seed profile has length " + std::to_string(seed.values.size()) +
                     ", model expects " + std::to_string(model.length()));
  }
  const double e = *model.calibrated_hop_error;
  const PhysicalBounds guard = bounds.value_or(default_bounds(model.parameter, model.stats()));

  GenerationChain chain;
  chain.seed_profile = seed;
  chain.hop_error = e;
  std::vector<double> current = seed.values;
  Phase phase = seed.phase;
  while (true) {
    const auto k = static_cast<double>(chain.hops.size() + 1);
    if (threshold == 0.0 || k * e > threshold) {
      chain.stop_reason = StopReason::threshold_exceeded;
      break;
    }
    if (static_cast<int>(chain.hops.size()) >= max_hops) {
      chain.stop_reason = StopReason::max_hops;
      break;
    }
    Hop hop = predict_hop(model, current, phase);
    bool in_bounds = true;
    for (double u : hop.values) {
      const double v = model.stats().denormalize(u);
      if (!std::isfinite(v) || !guard.contains(v)) {
        in_bounds = false;
        break;
      }
    }
    if (!in_bounds) {
      chain.stop_reason = StopReason::bound_violation;
      break;
    }
    current = hop.values;
    phase = hop.phase;
    chain.hops.push_back(std::move(hop));
    chain.accumulated_error = static_cast<double>(chain.hops.size()) * e;
  }
  return chain;
}

// ---------------------------------------------------------------------------
// Export

/// Columns not produced by any chain are filled with these constants.
struct ExportOptions {
  double reference_mah = data::kNominalCapacityMah;
  double time_step_s = 1.0;
  double start_time_s = 0.0;
  double fill_voltage_v = 3.7;  // nominal voltage of the reference cell
  double fill_temperature_c = 25.0;
  double fill_soc_percent = 50.0;
};

struct ParameterChain {
  Parameter parameter = Parameter::voltage;
  const GenerationChain* chain = nullptr;
  NormStats stats;
};

/// Cycle index of hop `h` (0-based). Discharge hops continue the cycle of the
/// preceding charge; a charge hop opens the next cycle.
inline int hop_cycle(const data::PhaseProfile& seed, std::size_t h) {
  const int offset = seed.phase == Phase::charge ? static_cast<int>((h + 1) / 2) : static_cast<int>(h / 2 + 1);
  return seed.cycle_index + offset;
}

/// Denormalized synthetic samples for one or more chains sharing a seed
/// cycle. Uses the shortest chain's hop count. Negative charge is clamped to 0.
inline std::vector<data::CycleSample> chain_samples(std::span<const ParameterChain> chains,
                                                    const ExportOptions& opts = {}) {
  if (chains.empty()) throw ConfigError("export: no chains");
  if (!(opts.time_step_s > 0.0)) throw ConfigError("export: time step must be positive");
  const auto& lead = *chains.front().chain;
  std::size_t hops = lead.hops.size();
  for (const auto& c : chains) {
    if (c.chain == nullptr) throw ConfigError("export: null chain");
    if (c.chain->seed_profile.cell_id != lead.seed_profile.cell_id ||
        c.chain->seed_profile.cycle_index != lead.seed_profile.cycle_index ||
        c.chain->seed_profile.phase != lead.seed_profile.phase) {
      throw ConfigError("export: chains start from different seed profiles");
    }
    hops = std::min(hops, c.chain->hops.size());
  }

  std::vector<data::CycleSample> out;
  double t = opts.start_time_s;
  for (std::size_t h = 0; h < hops; ++h) {
    const std::size_t length = lead.hops[h].values.size();
    for (std::size_t i = 0; i < length; ++i) {
      data::CycleSample s;
      s.cell_id = lead.seed_profile.cell_id;
      s.cycle_index = hop_cycle(lead.seed_profile, h);
      s.phase = lead.hops[h].phase;
      s.time_s = t;
      s.voltage_v = opts.fill_voltage_v;
      s.temperature_c = opts.fill_temperature_c;
      s.charge_mah = opts.fill_soc_percent / 100.0 * opts.reference_mah;
      s.provenance = data::Provenance::synthetic;
      for (const auto& c : chains) {
        const double v = c.stats.denormalize(c.chain->hops[h].values.at(i));
        switch (c.parameter) {
          case Parameter::voltage: s.voltage_v = v; break;
          case Parameter::temperature: s.temperature_c = v; break;
          case Parameter::soc: s.charge_mah = std::max(0.0, v / 100.0 * opts.reference_mah); break;
        }
      }
      out.push_back(std::move(s));
      t += opts.time_step_s;
    }
  }
  return out;
}

inline void export_chains(std::span<const ParameterChain> chains, std::ostream& out, const ExportOptions& opts = {}) {
  const auto samples = chain_samples(chains, opts);
  data::write_csv(out, samples, /*with_provenance=*/true);
  if (!out) throw Error("export: write failed");
}

inline void export_chain(const GenerationChain& chain, Parameter parameter, const NormStats& stats,
                         std::ostream& out, const ExportOptions& opts = {}) {
  const ParameterChain one{parameter, &chain, stats};
  export_chains(std::span<const ParameterChain>(&one, 1), out, opts);
}

inline nlohmann::json chain_metadata(const GenerationChain& chain, Parameter parameter) {
  return {
      {"parameter", to_string(parameter)},
      {"seed_cell", chain.seed_profile.cell_id},
      {"seed_cycle", chain.seed_profile.cycle_index},
      {"seed_phase", to_string(chain.seed_profile.phase)},
      {"hops", chain.hops.size()},
      {"accumulated_error", chain.accumulated_error},
      {"stop_reason", to_string(chain.stop_reason)},
      {"calibrated_hop_error", chain.hop_error},
  };
}

}  // namespace cyclegen::coupled
