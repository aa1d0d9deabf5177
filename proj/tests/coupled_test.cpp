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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "cyclegen/coupled.hpp"
#include "cyclegen/dataset.hpp"
#include "cyclegen/fixture.hpp"
#include "cyclegen/metrics.hpp"
#include "cyclegen/pipeline.hpp"
#include "test_models.hpp"

using namespace cyclegen;
using namespace cyclegen::coupled;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const NormStats kVolts{2.7, 4.2};

data::PhaseProfile seed(std::size_t length, Phase phase, int cycle = 3, double level = 0.5) {
  data::PhaseProfile p{Parameter::voltage, "cellX", cycle, phase, std::vector<double>(length, level)};
  for (std::size_t i = 0; i < length; ++i) p.values[i] += 0.01 * static_cast<double>(i);
  return p;
}

CoupledModel calibrated(CoupledModel m, double e) {
  m.set_hop_error(e);
  return m;
}

AlignedPair pair(std::vector<double> in, std::vector<double> out, Direction d) {
  AlignedPair p;
  p.input = std::move(in);
  p.target = std::move(out);
  p.direction = d;
  p.stats = kVolts;
  return p;
}

// Small trained voltage model shared by the fixture-backed tests.
struct TrainedFixture {
  pipeline::Prepared prepared;
  CoupledModel model;
};

const TrainedFixture& trained_fixture() {
  static const TrainedFixture f = [] {
    data::FixtureSpec spec;
    spec.n_cells = 2;
    spec.n_cycles = 8;
    spec.raw_length = 60;
    spec.seed = 21;
    pipeline::PrepareOptions opts;
    opts.length = 32;
    auto prepared = pipeline::prepare(data::make_fixture(spec), opts);
    nn::TrainConfig cfg;
    cfg.epochs = 300;
    cfg.seed = 5;
    auto training = pipeline::train_coupled(nn::Architecture({32, 32, 32, 32}), prepared.pairs, cfg);
    calibrate_hop_error(training.model, prepared.pairs.pairs);
    return TrainedFixture{std::move(prepared), std::move(training.model)};
  }();
  return f;
}

}  // namespace

TEST(CoupledModel, ValidatesPairing) {
  using oracle::affine_net;
  const auto c = affine_net(4, Direction::to_charge, Parameter::voltage, kVolts, 1, 0);
  const auto d = affine_net(4, Direction::to_discharge, Parameter::voltage, kVolts, 1, 0);
  EXPECT_NO_THROW(CoupledModel(c, d));
  EXPECT_THROW(CoupledModel(d, c), ConfigError);
  EXPECT_THROW(CoupledModel(c, affine_net(4, Direction::to_discharge, Parameter::soc, kVolts, 1, 0)), ConfigError);
  EXPECT_THROW(CoupledModel(c, affine_net(5, Direction::to_discharge, Parameter::voltage, kVolts, 1, 0)), ShapeError);
  EXPECT_THROW(CoupledModel(c, affine_net(4, Direction::to_discharge, Parameter::voltage, {2.5, 4.2}, 1, 0)),
               DataError);
}

TEST(PredictHop, AlternatesPhaseAndPicksNet) {
  const auto m = oracle::affine_coupled(4, Parameter::voltage, kVolts, -0.1, 0.2);
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  const auto from_charge = predict_hop(m, x, Phase::charge);
  EXPECT_EQ(from_charge.phase, Phase::discharge);
  EXPECT_EQ(from_charge.values, nn::forward(m.discharge_net, x));
  const auto from_discharge = predict_hop(m, x, Phase::discharge);
  EXPECT_EQ(from_discharge.phase, Phase::charge);
  EXPECT_EQ(from_discharge.values, nn::forward(m.charge_net, x));
  EXPECT_THROW(predict_hop(m, std::vector<double>{0.1, 0.2}, Phase::charge), ShapeError);
}

TEST(Calibrate, PerfectModelGivesZero) {
  auto m = oracle::affine_coupled(3, Parameter::voltage, kVolts, 0.0, 0.0);
  const std::vector<AlignedPair> pairs{pair({0.1, 0.5, 0.9}, {0.1, 0.5, 0.9}, Direction::to_charge),
                                       pair({0.2, 0.4, 0.6}, {0.2, 0.4, 0.6}, Direction::to_discharge)};
  EXPECT_EQ(calibrate_hop_error(m, pairs), 0.0);
  EXPECT_EQ(m.calibrated_hop_error, 0.0);
  EXPECT_EQ(m.charge_net.calibrated_hop_error, 0.0);
}

TEST(Calibrate, EqualsPairRmse) {
  auto m = oracle::affine_coupled(3, Parameter::voltage, kVolts, 0.0, 0.0);
  const std::vector<double> in{0.1, 0.5, 0.9}, target{0.3, 0.5, 0.6};
  const double r = metrics::rmse(in, target);
  const std::vector<AlignedPair> same{pair(in, target, Direction::to_charge), pair(in, target, Direction::to_discharge)};
  EXPECT_NEAR(calibrate_hop_error(m, same), r, 1e-15);

  const std::vector<double> other{0.0, 0.0, 0.0};
  const std::vector<AlignedPair> mixed{pair(in, target, Direction::to_charge), pair(in, other, Direction::to_discharge)};
  EXPECT_NEAR(calibrate_hop_error(m, mixed), 0.5 * (r + metrics::rmse(in, other)), 1e-15);
}

TEST(Calibrate, NeedsBothDirections) {
  auto m = oracle::affine_coupled(2, Parameter::voltage, kVolts, 0.0, 0.0);
  EXPECT_THROW(calibrate_hop_error(m, std::vector<AlignedPair>{}), DataError);
  const std::vector<AlignedPair> only{pair({0.1, 0.2}, {0.1, 0.2}, Direction::to_charge)};
  EXPECT_THROW(calibrate_hop_error(m, only), DataError);
}

TEST(GenerateChain, ZeroThresholdGivesNoHops) {
  const auto m = calibrated(oracle::affine_coupled(4, Parameter::voltage, kVolts, 0, 0), 0.01);
  const auto chain = generate_chain(m, seed(4, Phase::charge), 0.0, 100);
  EXPECT_TRUE(chain.hops.empty());
  EXPECT_EQ(chain.stop_reason, StopReason::threshold_exceeded);
  EXPECT_EQ(chain.accumulated_error, 0.0);
}

TEST(GenerateChain, ThresholdFiveTimesErrorGivesFiveHops) {
  const auto m = calibrated(oracle::affine_coupled(4, Parameter::voltage, kVolts, 0, 0), 0.01);
  const auto chain = generate_chain(m, seed(4, Phase::charge), 0.05, 100);
  EXPECT_EQ(chain.hops.size(), 5u);
  EXPECT_EQ(chain.stop_reason, StopReason::threshold_exceeded);
  EXPECT_EQ(chain.accumulated_error, 5 * 0.01);
}

TEST(GenerateChain, MaxHopsGivesFiftyCycles) {
  const auto m = calibrated(oracle::affine_coupled(4, Parameter::voltage, kVolts, 0, 0), 1e-4);
  const auto chain = generate_chain(m, seed(4, Phase::charge), kInf, 100);
  EXPECT_EQ(chain.hops.size(), 100u);
  EXPECT_EQ(chain.stop_reason, StopReason::max_hops);
  std::ostringstream out;
  export_chain(chain, Parameter::voltage, kVolts, out);
  std::istringstream in(out.str());
  std::set<int> cycles;
  for (const auto& s : data::parse_csv(in)) cycles.insert(s.cycle_index);
  // Seed cycle 3 (charge): the first discharge closes cycle 3, then 50 new charges open cycles 4..53.
  EXPECT_EQ(cycles.size(), 51u);
  EXPECT_EQ(*cycles.rbegin() - 3, 50);
}

TEST(GenerateChain, InvariantsHold) {
  const auto m = calibrated(oracle::affine_coupled(6, Parameter::voltage, kVolts, 0.001, -0.001), 0.0123);
  for (const auto start : {Phase::charge, Phase::discharge}) {
    const auto chain = generate_chain(m, seed(6, start), 0.5, 60);
    ASSERT_FALSE(chain.hops.empty());
    EXPECT_EQ(chain.hops.front().phase, opposite(start));
    for (std::size_t k = 1; k < chain.hops.size(); ++k) EXPECT_NE(chain.hops[k].phase, chain.hops[k - 1].phase);
    EXPECT_EQ(chain.accumulated_error, static_cast<double>(chain.hops.size()) * 0.0123);
    const auto again = generate_chain(m, seed(6, start), 0.5, 60);
    ASSERT_EQ(again.hops.size(), chain.hops.size());
    for (std::size_t k = 0; k < chain.hops.size(); ++k) EXPECT_EQ(again.hops[k].values, chain.hops[k].values);
  }
}

TEST(GenerateChain, MaxHopsZero) {
  const auto m = calibrated(oracle::affine_coupled(4, Parameter::voltage, kVolts, 0, 0), 0.01);
  const auto chain = generate_chain(m, seed(4, Phase::charge), kInf, 0);
  EXPECT_TRUE(chain.hops.empty());
  EXPECT_EQ(chain.stop_reason, StopReason::max_hops);
}

TEST(GenerateChain, StopsBeforeLeavingPhysicalBounds) {
  // Each hop adds 0.3 in normalized units; 4.5 V sits at 1.2.
  const auto m = calibrated(oracle::affine_coupled(4, Parameter::voltage, kVolts, 0.3, 0.3), 0.001);
  const auto chain = generate_chain(m, seed(4, Phase::charge, 3, 0.45), kInf, 100);
  EXPECT_EQ(chain.stop_reason, StopReason::bound_violation);
  EXPECT_EQ(chain.hops.size(), 2u);
  for (const auto& hop : chain.hops) {
    for (double u : hop.values) EXPECT_LE(kVolts.denormalize(u), 4.5);
  }
  // A custom window stops earlier.
  const auto tight = generate_chain(m, seed(4, Phase::charge, 3, 0.45), kInf, 100, PhysicalBounds{2.0, 4.0});
  EXPECT_EQ(tight.hops.size(), 1u);
}

TEST(GenerateChain, DefaultBounds) {
  const NormStats temp{39.5, 41.0};
  EXPECT_EQ(default_bounds(Parameter::voltage, temp).lo, 2.0);
  EXPECT_EQ(default_bounds(Parameter::voltage, temp).hi, 4.5);
  EXPECT_EQ(default_bounds(Parameter::soc, temp).lo, -5.0);
  EXPECT_EQ(default_bounds(Parameter::soc, temp).hi, 105.0);
  EXPECT_EQ(default_bounds(Parameter::temperature, temp).lo, 34.5);
  EXPECT_EQ(default_bounds(Parameter::temperature, temp).hi, 46.0);
}

TEST(GenerateChain, RejectsBadArguments) {
  const auto plain = oracle::affine_coupled(4, Parameter::voltage, kVolts, 0, 0);
  EXPECT_THROW(generate_chain(plain, seed(4, Phase::charge), 1.0, 5), ConfigError);
  const auto m = calibrated(plain, 0.01);
  EXPECT_THROW(generate_chain(m, seed(4, Phase::charge), -1.0, 5), ConfigError);
  EXPECT_THROW(generate_chain(m, seed(4, Phase::charge), 1.0, -1), ConfigError);
  EXPECT_THROW(generate_chain(m, seed(5, Phase::charge), 1.0, 5), ShapeError);
}

TEST(Export, EmptyChainIsHeaderOnly) {
  const auto m = calibrated(oracle::affine_coupled(4, Parameter::voltage, kVolts, 0, 0), 0.01);
  const auto chain = generate_chain(m, seed(4, Phase::charge), 0.0, 10);
  std::ostringstream out;
  export_chain(chain, Parameter::voltage, kVolts, out);
  EXPECT_EQ(out.str(), std::string(data::kCsvHeader) + ",provenance\n");
}

TEST(Export, TwoHopsFromDischargeSeedMakeOneCycle) {
  const auto m = calibrated(oracle::affine_coupled(8, Parameter::voltage, kVolts, 0, 0), 0.01);
  const auto chain = generate_chain(m, seed(8, Phase::discharge, 5), kInf, 2);
  const ParameterChain pc{Parameter::voltage, &chain, kVolts};
  const auto rows = chain_samples(std::span<const ParameterChain>(&pc, 1));
  ASSERT_EQ(rows.size(), 16u);
  std::set<std::pair<int, Phase>> phases;
  for (const auto& r : rows) {
    phases.insert({r.cycle_index, r.phase});
    EXPECT_EQ(r.provenance, data::Provenance::synthetic);
  }
  EXPECT_EQ(phases, (std::set<std::pair<int, Phase>>{{6, Phase::charge}, {6, Phase::discharge}}));
}

TEST(Export, HopCycleNumbering) {
  const auto c = seed(4, Phase::charge, 10);
  EXPECT_EQ(hop_cycle(c, 0), 10);  // discharge of the seed cycle
  EXPECT_EQ(hop_cycle(c, 1), 11);
  EXPECT_EQ(hop_cycle(c, 2), 11);
  const auto d = seed(4, Phase::discharge, 10);
  EXPECT_EQ(hop_cycle(d, 0), 11);
  EXPECT_EQ(hop_cycle(d, 1), 11);
  EXPECT_EQ(hop_cycle(d, 2), 12);
}

TEST(Export, RoundTripReproducesHopValues) {
  const auto m = calibrated(oracle::affine_coupled(16, Parameter::voltage, kVolts, 0.0131, -0.0127), 0.001);
  const auto chain = generate_chain(m, seed(16, Phase::charge, 1, 0.3), kInf, 12);
  ASSERT_EQ(chain.hops.size(), 12u);
  std::ostringstream out;
  export_chain(chain, Parameter::voltage, kVolts, out);
  std::istringstream in(out.str());
  const auto rows = data::parse_csv(in);
  ASSERT_EQ(rows.size(), 12u * 16u);
  for (std::size_t h = 0; h < chain.hops.size(); ++h) {
    for (std::size_t i = 0; i < 16; ++i) {
      EXPECT_NEAR(kVolts.normalize(rows[h * 16 + i].voltage_v), chain.hops[h].values[i], 1e-9);
    }
  }
  const auto profiles = data::segment(rows);
  EXPECT_EQ(profiles.size(), 12u * 3u);
}

TEST(Export, MultipleParametersShareRowsAndFillTheRest) {
  const auto mv = calibrated(oracle::affine_coupled(4, Parameter::voltage, kVolts, 0, 0), 0.01);
  const NormStats soc{0.0, 100.0};
  const auto ms = calibrated(oracle::affine_coupled(4, Parameter::soc, soc, -0.3, -0.3), 0.01);
  const auto cv = generate_chain(mv, seed(4, Phase::charge), kInf, 4);
  auto soc_seed = seed(4, Phase::charge);
  soc_seed.parameter = Parameter::soc;
  const auto cs = generate_chain(ms, soc_seed, kInf, 3, PhysicalBounds{-100, 200});
  const std::vector<ParameterChain> both{{Parameter::voltage, &cv, kVolts}, {Parameter::soc, &cs, soc}};
  const auto rows = chain_samples(both);
  ASSERT_EQ(rows.size(), 3u * 4u);  // shortest chain wins
  for (const auto& r : rows) {
    EXPECT_EQ(r.temperature_c, 25.0);  // not generated
    EXPECT_GE(r.charge_mah, 0.0);      // negative SOC clamps to empty
  }
  EXPECT_EQ(rows[0].voltage_v, kVolts.denormalize(cv.hops[0].values[0]));
  EXPECT_EQ(rows.back().charge_mah, 0.0);

  const auto only_v = chain_samples(std::vector<ParameterChain>{{Parameter::voltage, &cv, kVolts}});
  EXPECT_EQ(only_v.front().charge_mah, 0.5 * data::kNominalCapacityMah);
}

TEST(Export, Metadata) {
  const auto m = calibrated(oracle::affine_coupled(4, Parameter::voltage, kVolts, 0, 0), 0.01);
  const auto chain = generate_chain(m, seed(4, Phase::charge, 7), 0.05, 100);
  const auto j = chain_metadata(chain, Parameter::voltage);
  EXPECT_EQ(j.at("seed_cycle"), 7);
  EXPECT_EQ(j.at("hops"), 5);
  EXPECT_EQ(j.at("stop_reason"), "threshold_exceeded");
  EXPECT_EQ(j.at("calibrated_hop_error").get<double>(), 0.01);
  EXPECT_EQ(j.at("accumulated_error").get<double>(), 0.05);
}

TEST(TrainedFixture, HopStaysWithinVoltageWindow) {
  const auto& f = trained_fixture();
  for (const auto& p : f.prepared.pairs.pairs) {
    const Phase from = p.direction == Direction::to_discharge ? Phase::charge : Phase::discharge;
    for (double u : predict_hop(f.model, p.input, from).values) {
      const double v = f.model.stats().denormalize(u);
      EXPECT_GE(v, 2.0);
      EXPECT_LE(v, 4.5);
    }
  }
}

TEST(TrainedFixture, CalibratedErrorIsSmall) {
  const auto& f = trained_fixture();
  ASSERT_TRUE(f.model.calibrated_hop_error.has_value());
  EXPECT_LT(*f.model.calibrated_hop_error, 0.05);
}

TEST(TrainedFixture, ChainReingests) {
  const auto& f = trained_fixture();
  const auto start = pipeline::seed_profile(f.prepared.pairs, "cell1", 8, Phase::charge);
  const auto chain = generate_chain(f.model, start, kInf, 20);
  EXPECT_EQ(chain.hops.size(), 20u);
  std::ostringstream out;
  export_chain(chain, Parameter::voltage, f.model.stats(), out);
  std::istringstream in(out.str());
  const auto rows = data::parse_csv(in);
  const auto again = pipeline::prepare(rows, {Parameter::voltage, 32}, f.model.stats());
  EXPECT_EQ(again.pairs.count(Direction::to_discharge), 9u);
}
