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
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <string>

#include "cyclegen/dataset.hpp"
#include "cyclegen/io.hpp"
#include "cyclegen/model_io.hpp"

#ifndef CYCLEGEN_CLI_PATH
#error "CYCLEGEN_CLI_PATH must name the cyclegen executable"
#endif

namespace fs = std::filesystem;
using namespace cyclegen;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("cyclegen_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    if (!HasFailure()) fs::remove_all(dir_);
  }

  // Runs the CLI inside the scratch directory and returns its exit status.
  int run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && CYCLEGEN_LOG=warn '" + CYCLEGEN_CLI_PATH + "' " + args +
                            " >>cli.log 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const { return io::read_text(dir_ / name); }
  bool exists(const std::string& name) const { return fs::exists(dir_ / name); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  std::vector<data::CycleSample> samples(const std::string& name) const { return io::read_csv_file(dir_ / name); }

  static std::size_t lines(const std::string& text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  }

  // Training and test fixtures plus a small trained voltage model in models/.
  void train_small_model() {
    ASSERT_EQ(run("--seed 3 fixture --cells 2 --cycles 5 --raw-length 40 --out train.csv"), 0);
    ASSERT_EQ(run("--seed 4 fixture --cells 1 --cycles 4 --raw-length 40 --first-cell 3 --out test.csv"), 0);
    ASSERT_EQ(run("--seed 1 --length 16 --out-dir models --param voltage train --train train.csv --depth 3 "
                  "--width 16 --epochs 300"),
              0);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, FixtureParsesAndIsDeterministic) {
  ASSERT_EQ(run("--seed 7 fixture --cells 1 --cycles 4 --out f.csv"), 0);
  ASSERT_EQ(run("--seed 7 fixture --cells 1 --cycles 4 --out g.csv"), 0);
  EXPECT_EQ(read("f.csv"), read("g.csv"));
  const auto rows = samples("f.csv");
  EXPECT_EQ(data::segment(rows).size(), 24u);
  ASSERT_EQ(run("--seed 8 fixture --cells 1 --cycles 4 --out h.csv"), 0);
  EXPECT_NE(read("f.csv"), read("h.csv"));
}

TEST_F(Cli, FixtureDefaultsToOutDir) {
  ASSERT_EQ(run("--out-dir nested/out fixture --cycles 2"), 0);
  EXPECT_TRUE(exists("nested/out/fixture.csv"));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("fixture --cycles 0 --out f.csv"), 2);
  EXPECT_FALSE(exists("f.csv"));
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("--param pressure fixture"), 2);
  EXPECT_EQ(run("--param voltage train --train missing.csv --depth 2 --width 4"), 2);
  EXPECT_EQ(run("--help"), 0);

  write("bad.csv", std::string(data::kCsvHeader) + "\nc,1,charge,0,3.0,40,0\nc,1,charge,0,3.1,40,1\n");
  EXPECT_EQ(run("--param voltage train --train bad.csv --depth 2 --width 4"), 3);
  ASSERT_EQ(run("fixture --cycles 3 --raw-length 20 --out ok.csv"), 0);
  EXPECT_EQ(run("--param voltage train --train ok.csv"), 2);  // no architecture
  EXPECT_EQ(run("--length 8 --param voltage train --train ok.csv --depth 2 --width 4 --epochs 3 --lr 1e300"), 4);
}

TEST_F(Cli, ConfigFileWithFlagOverrides) {
  write("run.ini",
        "seed = 7\n"
        "[fixture]\n"
        "cycles = 3\n"
        "raw-length = 30\n"
        "out = cfg.csv\n");
  ASSERT_EQ(run("--config run.ini fixture"), 0);
  ASSERT_EQ(run("--seed 7 fixture --cycles 3 --raw-length 30 --out flags.csv"), 0);
  EXPECT_EQ(read("cfg.csv"), read("flags.csv"));

  ASSERT_EQ(run("--config run.ini fixture --cycles 2"), 0);
  std::set<int> cycles;
  for (const auto& s : samples("cfg.csv")) cycles.insert(s.cycle_index);
  EXPECT_EQ(cycles, (std::set<int>{1, 2}));
}

TEST_F(Cli, TuneRanksDefaultGridAndFeedsTrain) {
  ASSERT_EQ(run("--seed 2 fixture --cells 1 --cycles 3 --raw-length 30 --out t.csv"), 0);
  ASSERT_EQ(run("--seed 2 --length 8 --param soc tune --train t.csv --epochs 2"), 0);
  const auto ranked = read("soc_tuning.csv");
  EXPECT_EQ(ranked.substr(0, ranked.find('\n')), "rank,depth,width,param_count,final_loss");
  EXPECT_EQ(lines(ranked), 21u);
  const auto arch = nlohmann::json::parse(read("soc_architecture.json"));
  EXPECT_TRUE(arch.contains("widths"));
  ASSERT_EQ(run("--seed 2 --length 8 --param soc --out-dir m train --train t.csv --arch soc_architecture.json "
                "--epochs 3"),
            0);
  EXPECT_TRUE(exists("m/soc_charge.json"));
  EXPECT_TRUE(exists("m/soc_discharge.json"));
  EXPECT_EQ(lines(read("m/soc_loss.csv")), 4u);
  // An architecture tuned for another length is rejected.
  EXPECT_EQ(run("--length 16 --param soc train --train t.csv --arch soc_architecture.json"), 2);
}

TEST_F(Cli, TrainIsDeterministic) {
  train_small_model();
  const auto first = read("models/voltage_charge.json");
  ASSERT_EQ(run("--seed 1 --length 16 --out-dir again --param voltage train --train train.csv --depth 3 "
                "--width 16 --epochs 300"),
            0);
  EXPECT_EQ(read("again/voltage_charge.json"), first);
  EXPECT_EQ(read("again/voltage_discharge.json"), read("models/voltage_discharge.json"));
  std::istringstream in(first);
  const auto model = io::load_model(in);
  EXPECT_TRUE(model.calibrated_hop_error.has_value());
  EXPECT_EQ(model.trained_epochs, 300);
}

TEST_F(Cli, GenerateEvalPlotRoundTrip) {
  train_small_model();
  ASSERT_EQ(run("--param voltage --out-dir gen generate --model-dir models --seed-csv test.csv --seed-cycle 2 "
                "--max-hops 10"),
            0);
  const auto synthetic = samples("gen/synthetic.csv");
  EXPECT_EQ(synthetic.size(), 10u * 16u);
  for (const auto& s : synthetic) EXPECT_EQ(s.provenance, data::Provenance::synthetic);
  const auto meta = nlohmann::json::parse(read("gen/chain.json"));
  EXPECT_EQ(meta.at("chains").at(0).at("hops"), 10);
  EXPECT_EQ(meta.at("chains").at(0).at("seed_cycle"), 2);

  // The synthetic cycles are the model's own outputs, so it reproduces them.
  ASSERT_EQ(run("--param voltage --out-dir self eval --model-dir models --test gen/synthetic.csv"), 0);
  const auto self = nlohmann::json::parse(read("self/voltage_eval.json"));
  EXPECT_LT(self.at("discharge_net").at("rmse").get<double>(), 1e-9);
  EXPECT_LT(self.at("charge_net").at("rmse").get<double>(), 1e-9);

  ASSERT_EQ(run("--param voltage --out-dir ev eval --model-dir models --test test.csv"), 0);
  EXPECT_EQ(lines(read("ev/voltage_eval_discharge.csv")), 1u + 4u);
  EXPECT_EQ(lines(read("ev/voltage_eval_charge.csv")), 1u + 3u);
  EXPECT_EQ(run("--param voltage eval --model-dir models --test test.csv --drive-cycle"), 2);

  ASSERT_EQ(run("--param voltage --out-dir pl plot --model-dir models --data test.csv --cycle 1"), 0);
  const auto overlay = read("pl/voltage_discharge_cell3_c1.csv");
  EXPECT_EQ(overlay.substr(0, overlay.find('\n')), "step,true,predicted");
  EXPECT_EQ(lines(overlay), 17u);
  EXPECT_TRUE(exists("pl/voltage_discharge_cell3_c1.svg"));
  EXPECT_EQ(run("--param voltage plot --model-dir models --data test.csv --cycle 99"), 3);
}

TEST_F(Cli, MaxHopsZeroWritesHeaderOnly) {
  train_small_model();
  ASSERT_EQ(run("--param voltage generate --model-dir models --seed-csv test.csv --max-hops 0"), 0);
  EXPECT_EQ(read("synthetic.csv"), std::string(data::kCsvHeader) + ",provenance\n");
}

TEST_F(Cli, GeneratedDataRetrains) {
  train_small_model();
  ASSERT_EQ(run("--param voltage --out-dir gen generate --model-dir models --seed-csv test.csv --max-hops 12"), 0);
  EXPECT_EQ(run("--seed 9 --length 16 --out-dir re --param voltage train --train gen/synthetic.csv --depth 2 "
                "--width 8 --epochs 5"),
            0);
  EXPECT_TRUE(exists("re/voltage_charge.json"));
}
