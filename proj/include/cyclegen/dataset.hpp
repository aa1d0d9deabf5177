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

// Cycling-data ingestion and preprocessing: CSV parsing, per-phase
// segmentation, SOC conversion, tail padding, resampling, min/max scaling and
// construction of the (input, target) pairs each network trains on.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "cyclegen/error.hpp"
#include "cyclegen/types.hpp"

namespace cyclegen::data {

inline constexpr std::string_view kCsvHeader =
    "cell_id,cycle_index,phase,time_s,voltage_v,temperature_c,charge_mah";
inline constexpr std::string_view kProvenanceColumn = "provenance";

/// Nominal capacity of the reference Kokam pouch cell.
inline constexpr double kNominalCapacityMah = 740.0;

/// Sanity window for voltage profiles, a margin around the 2.7 V cut-off and
/// 4.2 V maximum of the reference cell.
inline constexpr double kVoltageFloor = 2.0;
inline constexpr double kVoltageCeiling = 4.5;

enum class Provenance { real, synthetic };

inline std::string_view to_string(Provenance p) { return p == Provenance::real ? "real" : "synthetic"; }

struct CycleSample {
  std::string cell_id;
  int cycle_index = 1;
  Phase phase = Phase::charge;
  double time_s = 0.0;
  double voltage_v = 0.0;
  double temperature_c = 0.0;
  double charge_mah = 0.0;
  Provenance provenance = Provenance::real;

  friend bool operator==(const CycleSample&, const CycleSample&) = default;
};

struct PhaseProfile {
  Parameter parameter = Parameter::voltage;
  std::string cell_id;
  int cycle_index = 1;
  Phase phase = Phase::charge;
  std::vector<double> values;
};

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

inline double parse_real(std::string_view field, std::string_view column, std::size_t line) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw DataError(at_line(line) + "cannot parse " + std::string(column) + " value '" + std::string(field) + "'");
  }
  return value;
}

inline int parse_int(std::string_view field, std::string_view column, std::size_t line) {
  int value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw DataError(at_line(line) + "cannot parse " + std::string(column) + " value '" + std::string(field) + "'");
  }
  return value;
}

/// Shortest representation that parses back to the same double.
inline std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses the cycling CSV. The header must be exactly kCsvHeader, optionally
/// followed by a `provenance` column. Errors name the 1-based file line.
inline std::vector<CycleSample> parse_csv(std::istream& in) {
  std::vector<CycleSample> samples;
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;
  bool with_provenance = false;
  std::map<std::tuple<std::string, int, Phase>, double> last_time;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!have_header) {
      if (line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
      if (line == kCsvHeader) {
        with_provenance = false;
      } else if (line == std::string(kCsvHeader) + "," + std::string(kProvenanceColumn)) {
        with_provenance = true;
      } else {
        throw DataError(detail::at_line(line_no) + "unexpected header '" + std::string(line) + "', expected '" +
                        std::string(kCsvHeader) + "'");
      }
      have_header = true;
      continue;
    }
    if (line.empty()) continue;

    const auto fields = detail::split(line);
    const std::size_t expected = with_provenance ? 8 : 7;
    if (fields.size() != expected) {
      throw DataError(detail::at_line(line_no) + "expected " + std::to_string(expected) + " columns, found " +
                      std::to_string(fields.size()));
    }
    CycleSample s;
    s.cell_id = std::string(fields[0]);
    if (s.cell_id.empty()) throw DataError(detail::at_line(line_no) + "empty cell_id");
    s.cycle_index = detail::parse_int(fields[1], "cycle_index", line_no);
    if (s.cycle_index < 1) throw DataError(detail::at_line(line_no) + "cycle_index must be >= 1");
    try {
      s.phase = parse_phase(fields[2]);
    } catch (const DataError& e) {
      throw DataError(detail::at_line(line_no) + e.what());
    }
    s.time_s = detail::parse_real(fields[3], "time_s", line_no);
    s.voltage_v = detail::parse_real(fields[4], "voltage_v", line_no);
    s.temperature_c = detail::parse_real(fields[5], "temperature_c", line_no);
    s.charge_mah = detail::parse_real(fields[6], "charge_mah", line_no);
    if (s.time_s < 0.0) throw DataError(detail::at_line(line_no) + "time_s must be >= 0");
    if (s.charge_mah < 0.0) throw DataError(detail::at_line(line_no) + "charge_mah must be >= 0");
    if (with_provenance) {
      if (fields[7] == "real") {
        s.provenance = Provenance::real;
      } else if (fields[7] == "synthetic") {
        s.provenance = Provenance::synthetic;
      } else {
        throw DataError(detail::at_line(line_no) + "provenance must be real|synthetic");
      }
    }

    auto key = std::make_tuple(s.cell_id, s.cycle_index, s.phase);
    if (auto it = last_time.find(key); it != last_time.end()) {
      if (!(s.time_s > it->second)) {
        throw DataError(detail::at_line(line_no) + "time_s is not strictly increasing within " + s.cell_id +
                        " cycle " + std::to_string(s.cycle_index) + " " + std::string(to_string(s.phase)));
      }
      it->second = s.time_s;
    } else {
      last_time.emplace(std::move(key), s.time_s);
    }
    samples.push_back(std::move(s));
  }
  if (!have_header) throw DataError("line 1: missing header");
  return samples;
}

inline void write_csv(std::ostream& out, std::span<const CycleSample> samples, bool with_provenance = false) {
  out << kCsvHeader;
  if (with_provenance) out << ',' << kProvenanceColumn;
  out << '\n';
  for (const auto& s : samples) {
    out << s.cell_id << ',' << s.cycle_index << ',' << to_string(s.phase) << ',' << detail::format_real(s.time_s)
        << ',' << detail::format_real(s.voltage_v) << ',' << detail::format_real(s.temperature_c) << ','
        << detail::format_real(s.charge_mah);
    if (with_provenance) out << ',' << to_string(s.provenance);
    out << '\n';
  }
}

/// Relabels phases from the slope of charge_mah, for data without a usable
/// phase column: rising charge is charging, falling charge is discharging.
/// A flat step inherits the previous label; the first sample of a cycle takes
/// the label of its first non-flat step.
inline std::vector<CycleSample> infer_phases(std::span<const CycleSample> samples) {
  std::vector<CycleSample> out(samples.begin(), samples.end());
  std::size_t i = 0;
  while (i < out.size()) {
    std::size_t end = i + 1;
    while (end < out.size() && out[end].cell_id == out[i].cell_id && out[end].cycle_index == out[i].cycle_index) {
      ++end;
    }
    std::optional<Phase> current;
    for (std::size_t k = i + 1; k < end && !current; ++k) {
      const double delta = out[k].charge_mah - out[k - 1].charge_mah;
      if (delta != 0.0) current = delta > 0.0 ? Phase::charge : Phase::discharge;
    }
    if (current) {
      for (std::size_t k = i; k < end; ++k) {
        if (k > i) {
          const double delta = out[k].charge_mah - out[k - 1].charge_mah;
          if (delta > 0.0) current = Phase::charge;
          if (delta < 0.0) current = Phase::discharge;
        }
        out[k].phase = *current;
      }
    }
    i = end;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conversions

/// State of charge in percent of a fixed reference capacity.
inline double soc_from_charge(double charge_mah, double reference_mah) {
  if (!(reference_mah > 0.0)) throw DataError("SOC reference capacity must be positive");
  if (charge_mah < 0.0) throw DataError("charge must be non-negative");
  return 100.0 * charge_mah / reference_mah;
}

inline double sample_value(const CycleSample& s, Parameter p, double reference_mah) {
  switch (p) {
    case Parameter::voltage: return s.voltage_v;
    case Parameter::soc: return soc_from_charge(s.charge_mah, reference_mah);
    case Parameter::temperature: return s.temperature_c;
  }
  return 0.0;
}

/// Groups samples into one profile per (cell, cycle, phase, parameter).
/// Output is ordered by cell_id, cycle, phase (charge first), then parameter;
/// values keep file order within each group.
inline std::vector<PhaseProfile> segment(std::span<const CycleSample> samples,
                                         double reference_mah = kNominalCapacityMah) {
  if (!(reference_mah > 0.0)) throw DataError("SOC reference capacity must be positive");
  std::map<std::tuple<std::string, int, Phase>, std::vector<const CycleSample*>> groups;
  for (const auto& s : samples) groups[{s.cell_id, s.cycle_index, s.phase}].push_back(&s);

  std::vector<PhaseProfile> profiles;
  profiles.reserve(groups.size() * kAllParameters.size());
  for (const auto& [key, members] : groups) {
    const auto& [cell, cycle, phase] = key;
    if (members.size() < 2) {
      throw DataError(cell + " cycle " + std::to_string(cycle) + " " + std::string(to_string(phase)) +
                      " phase has " + std::to_string(members.size()) + " sample(s); a profile needs at least 2");
    }
    for (const auto parameter : kAllParameters) {
      PhaseProfile profile{parameter, cell, cycle, phase, {}};
      profile.values.reserve(members.size());
      for (const auto* s : members) {
        const double v = sample_value(*s, parameter, reference_mah);
        if (parameter == Parameter::voltage && (v < kVoltageFloor || v > kVoltageCeiling)) {
          throw DataError(cell + " cycle " + std::to_string(cycle) + ": voltage " + detail::format_real(v) +
                          " V outside [2.0, 4.5] V");
        }
        profile.values.push_back(v);
      }
      profiles.push_back(std::move(profile));
    }
  }
  return profiles;
}

// ---------------------------------------------------------------------------
// Sequence shaping

/// Extends `values` to `target_len` by repeating its last value.
inline std::vector<double> pad_tail(std::span<const double> values, std::size_t target_len) {
  if (values.empty()) throw ShapeError("pad_tail: empty input");
  if (target_len < values.size()) {
    throw ShapeError("pad_tail: target length " + std::to_string(target_len) + " is shorter than input length " +
                     std::to_string(values.size()));
  }
  std::vector<double> out(values.begin(), values.end());
  out.resize(target_len, values.back());
  return out;
}

/// Linear interpolation onto `length` uniformly spaced positions spanning the
/// input. Both endpoints are copied exactly.
inline std::vector<double> resample_linear(std::span<const double> values, std::size_t length) {
  if (values.size() < 2) throw ShapeError("resample_linear: input needs at least 2 samples");
  if (length < 2) throw ShapeError("resample_linear: output length must be >= 2");
  std::vector<double> out(length);
  const std::size_t last_in = values.size() - 1;
  const std::size_t last_out = length - 1;
  out.front() = values.front();
  out.back() = values.back();
  for (std::size_t i = 1; i < last_out; ++i) {
    // Exact rational position i*last_in/last_out split into index + fraction.
    const std::size_t num = i * last_in;
    const std::size_t k = num / last_out;
    const double frac = static_cast<double>(num % last_out) / static_cast<double>(last_out);
    out[i] = frac == 0.0 ? values[k] : values[k] + frac * (values[k + 1] - values[k]);
  }
  return out;
}

inline std::vector<double> normalize(std::span<const double> values, const NormStats& stats) {
  stats.validate();
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [&](double v) { return stats.normalize(v); });
  return out;
}

inline std::vector<double> denormalize(std::span<const double> values, const NormStats& stats) {
  stats.validate();
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [&](double u) { return stats.denormalize(u); });
  return out;
}

/// Min/max of one parameter over a set of profiles.
inline NormStats compute_stats(std::span<const PhaseProfile> profiles, Parameter parameter) {
  NormStats stats{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : profiles) {
    if (p.parameter != parameter) continue;
    for (double v : p.values) {
      stats.min = std::min(stats.min, v);
      stats.max = std::max(stats.max, v);
    }
  }
  if (!std::isfinite(stats.min)) {
    throw DataError("no " + std::string(to_string(parameter)) + " profiles to compute statistics from");
  }
  stats.validate();
  return stats;
}

// ---------------------------------------------------------------------------
// Pairs

/// Equalizes the two raw profiles by tail padding the shorter, resamples both
/// to `length`, and scales them with `stats`.
inline std::pair<std::vector<double>, std::vector<double>> align_profiles(std::span<const double> input,
                                                                          std::span<const double> target,
                                                                          std::size_t length,
                                                                          const NormStats& stats) {
  const std::size_t n = std::max(input.size(), target.size());
  const auto in = resample_linear(pad_tail(input, n), length);
  const auto out = resample_linear(pad_tail(target, n), length);
  return {normalize(in, stats), normalize(out, stats)};
}

/// Shapes a single raw profile the way it would enter a network.
inline std::vector<double> prepare_profile(std::span<const double> values, std::size_t length, const NormStats& stats) {
  return normalize(resample_linear(values, length), stats);
}

struct PairSet {
  std::vector<AlignedPair> pairs;
  std::size_t skipped_to_charge = 0;  // discharge profiles with no successor charge profile

  std::size_t count(Direction d) const {
    return static_cast<std::size_t>(
        std::count_if(pairs.begin(), pairs.end(), [d](const AlignedPair& p) { return p.direction == d; }));
  }
  std::vector<AlignedPair> of(Direction d) const {
    std::vector<AlignedPair> out;
    std::copy_if(pairs.begin(), pairs.end(), std::back_inserter(out),
                 [d](const AlignedPair& p) { return p.direction == d; });
    return out;
  }
};

/// Builds both pair directions for one parameter.
///   to_discharge: charge(c) -> discharge(c)
///   to_charge:    discharge(c) -> charge(c + 1), same cell
/// Cycles lacking either phase are not used. Pairs are ordered by cell, then
/// cycle, with the to_discharge pair of a cycle before its to_charge pair.
inline PairSet build_pairs(std::span<const PhaseProfile> profiles, Parameter parameter, std::size_t length,
                           const NormStats& stats) {
  stats.validate();
  if (length < 2) throw ConfigError("model length must be >= 2");
  struct Phases {
    const PhaseProfile* charge = nullptr;
    const PhaseProfile* discharge = nullptr;
  };
  std::map<std::string, std::map<int, Phases>> cells;
  for (const auto& p : profiles) {
    if (p.parameter != parameter) continue;
    auto& slot = cells[p.cell_id][p.cycle_index];
    (p.phase == Phase::charge ? slot.charge : slot.discharge) = &p;
  }

  PairSet result;
  for (const auto& [cell, cycles] : cells) {
    for (const auto& [cycle, phases] : cycles) {
      if (phases.charge == nullptr || phases.discharge == nullptr) continue;
      {
        auto [in, out] = align_profiles(phases.charge->values, phases.discharge->values, length, stats);
        result.pairs.push_back({std::move(in), std::move(out), parameter, Direction::to_discharge, cell, cycle,
                                cycle, stats});
      }
      const auto next = cycles.find(cycle + 1);
      if (next == cycles.end() || next->second.charge == nullptr) {
        ++result.skipped_to_charge;
        continue;
      }
      auto [in, out] = align_profiles(phases.discharge->values, next->second.charge->values, length, stats);
      result.pairs.push_back(
          {std::move(in), std::move(out), parameter, Direction::to_charge, cell, cycle, cycle + 1, stats});
    }
  }
  return result;
}

}  // namespace cyclegen::data
