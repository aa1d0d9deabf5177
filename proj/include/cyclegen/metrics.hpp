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

// Error metrics between predicted (y) and true (x) sequences:
//   MSE  = (1/n) sum (y_i - x_i)^2
//   MAE  = (1/n) sum |y_i - x_i|
//   RMSE = sqrt(MSE)
// Reports average per-cycle values; they are not pooled over all points.

#include <charconv>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cyclegen/error.hpp"

namespace cyclegen::metrics {

namespace detail {
inline void check_lengths(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.empty()) {
    throw ShapeError("metrics need equal non-zero lengths, got " + std::to_string(pred.size()) + " and " +
                     std::to_string(truth.size()));
  }
}
}  // namespace detail

inline double mse(std::span<const double> pred, std::span<const double> truth) {
  detail::check_lengths(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

inline double mae(std::span<const double> pred, std::span<const double> truth) {
  detail::check_lengths(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - truth[i]);
  return sum / static_cast<double>(pred.size());
}

inline double rmse(std::span<const double> pred, std::span<const double> truth) {
  return std::sqrt(mse(pred, truth));
}

struct ErrorTriple {
  double mse = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
};

struct CycleMetrics {
  int cycle_index = 0;
  double mse = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
};

struct MetricsReport {
  std::vector<CycleMetrics> per_cycle;
  ErrorTriple aggregate;
  std::size_t points_per_cycle = 0;

  /// Appends one cycle's metrics. rmse is sqrt(mse) of the same pair.
  void add(int cycle_index, std::span<const double> pred, std::span<const double> truth) {
    const double m = mse(pred, truth);
    per_cycle.push_back({cycle_index, m, mae(pred, truth), std::sqrt(m)});
    points_per_cycle = pred.size();
  }

  /// Recomputes the aggregate as the arithmetic mean of the per-cycle rows.
  void finalize() {
    aggregate = {};
    if (per_cycle.empty()) return;
    for (const auto& row : per_cycle) {
      aggregate.mse += row.mse;
      aggregate.mae += row.mae;
      aggregate.rmse += row.rmse;
    }
    const double n = static_cast<double>(per_cycle.size());
    aggregate.mse /= n;
    aggregate.mae /= n;
    aggregate.rmse /= n;
  }
};

/// Ordinary least-squares slope of y against x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("ols_slope: length mismatch");
  if (x.size() < 2) throw DataError("trend needs at least 2 cycles");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw DataError("trend needs at least 2 distinct cycle indices");
  return sxy / sxx;
}

/// Slope of each per-cycle metric against cycle index.
inline ErrorTriple cycle_trend(const MetricsReport& report) {
  if (report.per_cycle.size() < 2) throw DataError("trend needs at least 2 cycles");
  std::vector<double> x;
  std::vector<double> mse_v;
  std::vector<double> mae_v;
  std::vector<double> rmse_v;
  for (const auto& row : report.per_cycle) {
    x.push_back(static_cast<double>(row.cycle_index));
    mse_v.push_back(row.mse);
    mae_v.push_back(row.mae);
    rmse_v.push_back(row.rmse);
  }
  return {ols_slope(x, mse_v), ols_slope(x, mae_v), ols_slope(x, rmse_v)};
}

namespace detail {
inline std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}
}  // namespace detail

inline void write_per_cycle_csv(std::ostream& out, const MetricsReport& report) {
  out << "cycle_index,mse,mae,rmse\n";
  for (const auto& row : report.per_cycle) {
    out << row.cycle_index << ',' << detail::fmt(row.mse) << ',' << detail::fmt(row.mae) << ','
        << detail::fmt(row.rmse) << '\n';
  }
}

}  // namespace cyclegen::metrics
