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

// Augments a small synthetic dataset: trains voltage ChargeNet/DischargeNet
// on three fixture cells and chains them from the first cycle of a fourth.
//
//   ./augment_fixture [epochs] > synthetic.csv

#include <cstdlib>
#include <iostream>

#include "cyclegen.hpp"

using namespace cyclegen;

int main(int argc, char** argv) {
  const int epochs = argc > 1 ? std::atoi(argv[1]) : 100;

  const auto train_samples = data::make_fixture({.n_cells = 3, .n_cycles = 20, .raw_length = 120, .seed = 1});
  const auto seed_samples = data::make_fixture({.n_cells = 1, .n_cycles = 2, .raw_length = 120, .seed = 2, .first_cell = 4});

  const pipeline::PrepareOptions opts{Parameter::voltage, 64};
  const auto train = pipeline::prepare(train_samples, opts);
  const auto held_out = pipeline::prepare(seed_samples, opts, train.stats);

  nn::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = 3;
  auto trained = pipeline::train_coupled(nn::Architecture({64, 64, 64, 64}), train.pairs, cfg);
  const double e = coupled::calibrate_hop_error(trained.model, held_out.pairs.pairs);

  const auto seed = pipeline::seed_profile(held_out.pairs, "cell4", 1, Phase::charge);
  const auto chain = coupled::generate_chain(trained.model, seed, /*threshold=*/40 * e, /*max_hops=*/100);
  std::cerr << "hop error " << e << ", " << chain.hops.size() << " hops, stop: " << coupled::to_string(chain.stop_reason)
            << '\n';
  coupled::export_chain(chain, Parameter::voltage, train.stats, std::cout);
  return 0;
}
