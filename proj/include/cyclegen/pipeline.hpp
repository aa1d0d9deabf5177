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

// End-to-end steps used by the command-line tool: samples -> pairs, pairs ->
// trained coupled model.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cyclegen/coupled.hpp"
#include "cyclegen/dataset.hpp"
#include "cyclegen/error.hpp"
#include "cyclegen/nn.hpp"
#include "cyclegen/random.hpp"
#include "cyclegen/tuner.hpp"

namespace cyclegen::pipeline {

struct PrepareOptions {
  Parameter parameter = Parameter::voltage;
  std::size_t length = 128;
  double reference_mah = data::kNominalCapacityMah;
};

struct Prepared {
  std::vector<data::PhaseProfile> profiles;
  NormStats stats;
  data::PairSet pairs;
};

/// Segments `samples` and builds pairs. Without `stats` (a training split)
/// the statistics are computed from these samples.
inline Prepared prepare(std::span<const data::CycleSample> samples, const PrepareOptions& opts,
                        std::optional<NormStats> stats = std::nullopt) {
  Prepared out;
  out.profiles = data::segment(samples, opts.reference_mah);
  out.stats = stats ? *stats : data::compute_stats(out.profiles, opts.parameter);
  out.pairs = data::build_pairs(out.profiles, opts.parameter, opts.length, out.stats);
  return out;
}

struct CoupledTraining {
  coupled::CoupledModel model;
  std::vector<double> charge_loss;
  std::vector<double> discharge_loss;
};

/// Trains ChargeNet and DischargeNet with the same architecture. The two nets
/// get seeds derived from cfg.seed.
inline CoupledTraining train_coupled(const nn::Architecture& arch, const data::PairSet& pairs,
                                     const nn::TrainConfig& cfg) {
  const auto charge_pairs = pairs.of(Direction::to_charge);
  const auto discharge_pairs = pairs.of(Direction::to_discharge);
  if (charge_pairs.empty() || discharge_pairs.empty()) {
    throw DataError("training needs pairs of both directions (at least two consecutive cycles)");
  }
  const auto [charge_arch, discharge_arch] = tuner::shared_architecture(arch);
  nn::TrainConfig charge_cfg = cfg;
  charge_cfg.seed = derive_seed(cfg.seed, 0);
  nn::TrainConfig discharge_cfg = cfg;
  discharge_cfg.seed = derive_seed(cfg.seed, 1);
  auto charge = nn::train(charge_arch, charge_pairs, charge_cfg);
  auto discharge = nn::train(discharge_arch, discharge_pairs, discharge_cfg);
  return {coupled::CoupledModel(std::move(charge.model), std::move(discharge.model)),
          std::move(charge.loss_history), std::move(discharge.loss_history)};
}

inline const data::PhaseProfile& find_profile(std::span<const data::PhaseProfile> profiles, Parameter parameter,
                                              const std::string& cell, int cycle, Phase phase) {
  for (const auto& p : profiles) {
    if (p.parameter == parameter && p.cell_id == cell && p.cycle_index == cycle && p.phase == phase) return p;
  }
  throw DataError("no " + std::string(to_string(phase)) + " profile for " + cell + " cycle " +
                  std::to_string(cycle));
}

/// A chain seed in network representation, taken from the cycle's
/// to_discharge pair: the charge profile is its input, the discharge profile
/// its target. Both are already padded, resampled and normalized.
inline data::PhaseProfile seed_profile(const data::PairSet& pairs, const std::string& cell, int cycle, Phase phase) {
  for (const auto& p : pairs.pairs) {
    if (p.direction != Direction::to_discharge || p.cell_id != cell || p.input_cycle != cycle) continue;
    return {p.parameter, cell, cycle, phase, phase == Phase::charge ? p.input : p.target};
  }
  throw DataError("no complete cycle " + std::to_string(cycle) + " for " + cell + " to seed from");
}

}  // namespace cyclegen::pipeline
