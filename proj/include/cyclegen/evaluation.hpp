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

#include <nlohmann/json.hpp>

#include <span>
#include <string>

#include "cyclegen/coupled.hpp"
#include "cyclegen/error.hpp"
#include "cyclegen/metrics.hpp"
#include "cyclegen/nn.hpp"
#include "cyclegen/types.hpp"

namespace cyclegen::metrics {

struct CoupledEvaluation {
  MetricsReport charge_net;     // to_charge pairs
  MetricsReport discharge_net;  // to_discharge pairs

  const MetricsReport& of(Direction d) const { return d == Direction::to_charge ? charge_net : discharge_net; }
};

/// Per-cycle metrics in physical units for one network. Rows are keyed by
/// the target cycle and follow the order of `pairs`.
inline MetricsReport evaluate_net(const nn::ModelWeights& net, std::span<const AlignedPair> pairs) {
  MetricsReport report;
  for (const auto& p : pairs) {
    if (p.direction != net.direction) continue;
    if (p.parameter != net.parameter) throw DataError("evaluate: pair parameter differs from the model's");
    if (p.stats != net.input_stats) {
      throw DataError("evaluate: pairs were normalized with different stats than the model");
    }
    const auto pred = data::denormalize(nn::forward(net, p.input), net.output_stats);
    const auto truth = data::denormalize(p.target, net.output_stats);
    report.add(p.target_cycle, pred, truth);
  }
  report.finalize();
  return report;
}

inline CoupledEvaluation evaluate(const coupled::CoupledModel& model, std::span<const AlignedPair> test_pairs) {
  if (test_pairs.empty()) throw DataError("evaluate: empty test set");
  return {evaluate_net(model.charge_net, test_pairs), evaluate_net(model.discharge_net, test_pairs)};
}

inline nlohmann::json aggregate_json(const MetricsReport& report) {
  nlohmann::json j = {
      {"cycles", report.per_cycle.size()},
      {"points_per_cycle", report.points_per_cycle},
      {"mse", report.aggregate.mse},
      {"mae", report.aggregate.mae},
      {"rmse", report.aggregate.rmse},
  };
  if (report.per_cycle.size() >= 2) {
    const auto trend = cycle_trend(report);
    j["trend"] = {{"mse", trend.mse}, {"mae", trend.mae}, {"rmse", trend.rmse}};
  }
  return j;
}

}  // namespace cyclegen::metrics
