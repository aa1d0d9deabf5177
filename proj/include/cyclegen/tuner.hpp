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

// Budgeted architecture search: every (depth, hidden width) candidate is
// trained briefly on a small slice of data and ranked by its final training
// loss. The winner is reused for both networks of a parameter.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cyclegen/error.hpp"
#include "cyclegen/nn.hpp"
#include "cyclegen/random.hpp"
#include "cyclegen/types.hpp"

namespace cyclegen::tuner {

struct GridSpec {
  std::vector<int> depths{2, 4, 6, 8, 10};  // weight layers
  std::vector<std::size_t> widths{16, 32, 64, 128};
  int tuning_epochs = 50;
  int tuning_cycles = 2;
  std::uint64_t seed = 0;

  void validate() const {
    if (depths.empty() || widths.empty()) throw ConfigError("grid: depths and widths must be non-empty");
    for (int d : depths) {
      if (d < 1) throw ConfigError("grid: depths must be positive");
    }
    for (auto w : widths) {
      if (w < 1) throw ConfigError("grid: widths must be positive");
    }
    if (tuning_epochs < 1) throw ConfigError("grid: tuning epochs must be positive");
    if (tuning_cycles < 1) throw ConfigError("grid: tuning cycles must be positive");
  }
};

struct Candidate {
  int depth = 0;
  std::size_t width = 0;
  nn::Architecture arch;
};

struct CandidateResult {
  nn::Architecture arch;
  int depth = 0;
  std::size_t width = 0;
  double final_loss = 0.0;  // +inf when training diverged
  std::size_t param_count = 0;
  std::size_t grid_index = 0;
};

struct TuneResult {
  std::vector<CandidateResult> ranked;
  nn::Architecture selected;
};

/// depths x widths in row-major order (depth outer), uniform hidden width.
inline std::vector<Candidate> enumerate_grid(const GridSpec& spec, std::size_t d_in, std::size_t d_out,
                                             nn::Activation activation = nn::Activation::relu) {
  spec.validate();
  std::vector<Candidate> out;
  out.reserve(spec.depths.size() * spec.widths.size());
  for (int depth : spec.depths) {
    for (auto width : spec.widths) {
      std::vector<std::size_t> widths{d_in};
      for (int i = 1; i < depth; ++i) widths.push_back(width);
      widths.push_back(d_out);
      out.push_back({depth, width, nn::Architecture(std::move(widths), activation)});
    }
  }
  return out;
}

/// Strict weak order on (loss, param_count, grid_index).
inline bool ranks_before(const CandidateResult& a, const CandidateResult& b) {
  if (a.final_loss != b.final_loss) return a.final_loss < b.final_loss;
  if (a.param_count != b.param_count) return a.param_count < b.param_count;
  return a.grid_index < b.grid_index;
}

/// Sorts results and picks the leader. Throws if every candidate diverged.
inline TuneResult rank(std::vector<CandidateResult> results) {
  if (results.empty()) throw ConfigError("tune: empty candidate list");
  std::sort(results.begin(), results.end(), ranks_before);
  if (!std::isfinite(results.front().final_loss)) throw DivergenceError("tune: every candidate diverged");
  TuneResult out;
  out.selected = results.front().arch;
  out.ranked = std::move(results);
  return out;
}

/// The first `cycles` to_discharge pairs of the first cell present.
inline std::vector<AlignedPair> tuning_slice(std::span<const AlignedPair> pairs, int cycles) {
  std::vector<AlignedPair> slice;
  const AlignedPair* first = nullptr;
  for (const auto& p : pairs) {
    if (p.direction != Direction::to_discharge) continue;
    if (first == nullptr) first = &p;
    if (p.cell_id != first->cell_id) continue;
    if (static_cast<int>(slice.size()) >= cycles) break;
    slice.push_back(p);
  }
  return slice;
}

/// Trains every candidate for `spec.tuning_epochs` on `slice`. Candidate i
/// uses seed derive_seed(spec.seed, i), so results do not depend on `jobs`.
/// `base` supplies the optimizer settings; its epochs and seed are replaced.
inline TuneResult tune(const GridSpec& spec, std::span<const AlignedPair> slice, nn::TrainConfig base = {},
                       unsigned jobs = 1, nn::Activation activation = nn::Activation::relu) {
  if (slice.empty()) throw DataError("tune: empty tuning slice");
  const auto candidates =
      enumerate_grid(spec, slice.front().input.size(), slice.front().target.size(), activation);
  std::vector<CandidateResult> results(candidates.size());

  auto run = [&](std::size_t i) {
    const auto& cand = candidates[i];
    nn::TrainConfig cfg = base;
    cfg.epochs = spec.tuning_epochs;
    cfg.seed = derive_seed(spec.seed, i);
    CandidateResult r{cand.arch, cand.depth, cand.width, 0.0, nn::param_count(cand.arch), i};
    try {
      r.final_loss = nn::train(cand.arch, slice, cfg).loss_history.back();
    } catch (const DivergenceError&) {
      r.final_loss = std::numeric_limits<double>::infinity();
    }
    results[i] = std::move(r);
  };

  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(candidates.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < candidates.size(); ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < candidates.size(); i = next++) {
          try {
            run(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    workers.clear();
    if (failure) std::rethrow_exception(failure);
  }
  return rank(std::move(results));
}

/// ChargeNet reuses the architecture tuned on DischargeNet pairs.
inline std::pair<nn::Architecture, nn::Architecture> shared_architecture(const nn::Architecture& selected) {
  return {selected, selected};
}

inline void write_ranked_csv(std::ostream& out, std::span<const CandidateResult> ranked) {
  out << "rank,depth,width,param_count,final_loss\n";
  std::size_t rank = 1;
  for (const auto& r : ranked) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), r.final_loss);
    out << rank++ << ',' << r.depth << ',' << r.width << ',' << r.param_count << ',' << std::string(buf, ptr)
        << '\n';
  }
}

}  // namespace cyclegen::tuner
