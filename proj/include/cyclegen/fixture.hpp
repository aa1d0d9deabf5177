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

// Deterministic pseudo-battery used as a test dataset.
//
// Each cycle is a CC/CV charge followed by a constant-current discharge of a
// cell whose capacity fades linearly: cycle c holds nominal * (1 - fade * c).
// Shapes:
//   charge     voltage climbs from ~3.0 V to the 4.2 V CV plateau; the CC/CV
//              knee moves earlier as the cell ages. Charge grows linearly in
//              CC then saturates exponentially in CV.
//   discharge  voltage falls 4.2 -> 2.7 V with an initial IR drop and a steep
//              end-of-discharge knee; 50% more samples than the charge phase.
//   temperature  a gentle rise during CC that relaxes in CV, then a ~0.8 C
//              climb through the discharge, around a 40 C ambient.
// Cycle-to-cycle variability grows with capacity loss: the delivered
// capacity jitters and each discharge stops short of empty by a random
// residual, both scaled by the fraction of capacity lost.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cyclegen/dataset.hpp"
#include "cyclegen/error.hpp"
#include "cyclegen/random.hpp"

namespace cyclegen::data {

struct FixtureSpec {
  int n_cells = 1;
  int n_cycles = 4;
  int raw_length = 200;  // samples in a charge phase
  std::uint64_t seed = 0;
  double fade_rate = 0.0033;  // capacity fraction lost per cycle
  int first_cell = 1;         // cells are named cell<first_cell>, cell<first_cell+1>, ...
  double nominal_mah = kNominalCapacityMah;

  void validate() const {
    if (n_cells < 1) throw ConfigError("fixture: cells must be >= 1");
    if (n_cycles < 1) throw ConfigError("fixture: cycles must be >= 1");
    if (raw_length < 4) throw ConfigError("fixture: raw length must be >= 4");
    if (!(fade_rate > 0.0)) throw ConfigError("fixture: fade rate must be positive");
    if (!(fade_rate * n_cycles < 1.0)) throw ConfigError("fixture: fade_rate * cycles must be < 1");
    if (first_cell < 1) throw ConfigError("fixture: first cell index must be >= 1");
    if (!(nominal_mah > 0.0)) throw ConfigError("fixture: nominal capacity must be positive");
  }

  int discharge_length() const { return raw_length + raw_length / 2; }
};

namespace detail {

inline double saturate(double x, double tau, double span) {
  return (1.0 - std::exp(-x / tau)) / (1.0 - std::exp(-span / tau));
}

}  // namespace detail

inline std::vector<CycleSample> make_fixture(const FixtureSpec& spec) {
  spec.validate();
  constexpr double kCutoff = 2.7;
  constexpr double kMaxVoltage = 4.2;
  constexpr double kAmbient = 40.0;
  constexpr double kRestSeconds = 300.0;

  std::vector<CycleSample> samples;
  samples.reserve(static_cast<std::size_t>(spec.n_cells) * static_cast<std::size_t>(spec.n_cycles) *
                  static_cast<std::size_t>(spec.raw_length + spec.discharge_length()));

  for (int k = 0; k < spec.n_cells; ++k) {
    const int cell_number = spec.first_cell + k;
    const std::string cell_id = "cell" + std::to_string(cell_number);
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(cell_number)));
    const double ambient = kAmbient + rng.uniform(-0.1, 0.1);
    const double resistance = 1.0 + rng.uniform(-0.1, 0.1);
    double t = 0.0;

    for (int c = 1; c <= spec.n_cycles; ++c) {
      const double retained = 1.0 - spec.fade_rate * c;
      const double lost = 1.0 - retained;
      const double capacity = spec.nominal_mah * retained * (1.0 + 0.01 * lost * rng.normal());
      const double residual = std::min(0.5, 0.2 * lost * std::abs(rng.normal()));

      // Charge.
      const int n_charge = spec.raw_length;
      const double knee = 0.7 - 0.3 * lost;
      const double charge_duration = 4000.0 * retained;
      const double dt_charge = charge_duration / (n_charge - 1);
      for (int i = 0; i < n_charge; ++i) {
        const double x = static_cast<double>(i) / (n_charge - 1);
        double v = kMaxVoltage;
        double q = 0.0;
        double temp = ambient;
        if (x < knee) {
          const double u = x / knee;
          const double shape = 0.2 + 0.8 * (0.6 * u + 0.4 * detail::saturate(u, 0.1, 1.0));
          v = kCutoff + (kMaxVoltage - kCutoff) * shape + 0.02 * lost * resistance;
          v = std::min(v, kMaxVoltage);
          q = capacity * 0.85 * u;
          temp += 0.3 * (1.0 + lost) * u;
        } else {
          q = capacity * (0.85 + 0.15 * detail::saturate(x - knee, 0.08, 1.0 - knee));
          temp += 0.3 * (1.0 + lost) * std::exp(-(x - knee) / 0.1);
        }
        samples.push_back({cell_id, c, Phase::charge, t, v + 0.001 * rng.normal(), temp + 0.005 * rng.normal(),
                           std::max(0.0, q + 0.2 * rng.normal()), Provenance::real});
        t += dt_charge;
      }
      t += kRestSeconds;

      // Discharge.
      const int n_discharge = spec.discharge_length();
      const double dt_discharge = 1.25 * charge_duration / (n_discharge - 1);
      for (int i = 0; i < n_discharge; ++i) {
        const double x = static_cast<double>(i) / (n_discharge - 1);
        const double drop = 0.15 * detail::saturate(x, 0.04, 1.0) + 0.6 * x + 0.25 * std::pow(x, 6);
        const double v = kMaxVoltage - (kMaxVoltage - kCutoff) * drop - 0.05 * lost * resistance;
        const double q = capacity * (residual + (1.0 - residual) * (1.0 - x));
        const double temp = ambient + 0.8 * (1.0 + lost) * x * x;
        samples.push_back({cell_id, c, Phase::discharge, t, v + 0.001 * rng.normal(), temp + 0.005 * rng.normal(),
                           std::max(0.0, q + 0.2 * rng.normal()), Provenance::real});
        t += dt_discharge;
      }
      t += kRestSeconds;
    }
  }
  return samples;
}

}  // namespace cyclegen::data
