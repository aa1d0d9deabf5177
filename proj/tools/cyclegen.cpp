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

// cyclegen: fixture generation, tuning, training, chained generation,
// evaluation and plot export for coupled charge/discharge networks.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical divergence.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cyclegen.hpp"

namespace fs = std::filesystem;
using namespace cyclegen;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

struct SharedOptions {
  std::uint64_t seed = 0;
  fs::path out_dir = ".";
  std::vector<std::string> params{"voltage"};
  std::size_t length = 128;
  double reference_mah = data::kNominalCapacityMah;

  Parameter parameter() const {
    if (params.size() != 1) throw ConfigError("this command takes exactly one --param");
    return parse_parameter(params.front());
  }
  pipeline::PrepareOptions prepare() const { return {parameter(), length, reference_mah}; }
};

fs::path model_path(const fs::path& dir, Parameter p, Direction d) {
  return dir / (std::string(to_string(p)) + "_" + std::string(to_string(d)) + ".json");
}

coupled::CoupledModel load_coupled(const fs::path& dir, Parameter p) {
  return coupled::CoupledModel(io::load_model_file(model_path(dir, p, Direction::to_charge)),
                               io::load_model_file(model_path(dir, p, Direction::to_discharge)));
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  io::write_atomic(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

std::string fmt_real(double v) { return data::detail::format_real(v); }

// --- fixture ---------------------------------------------------------------

struct FixtureArgs {
  data::FixtureSpec spec;
  fs::path out;
};

void cmd_fixture(const SharedOptions& shared, FixtureArgs args) {
  args.spec.seed = shared.seed;
  const auto samples = data::make_fixture(args.spec);
  const fs::path out = args.out.empty() ? shared.out_dir / "fixture.csv" : args.out;
  io::write_atomic(out, [&](std::ostream& o) { data::write_csv(o, samples); });
  spdlog::info("wrote {} samples ({} cells x {} cycles) to {}", samples.size(), args.spec.n_cells,
               args.spec.n_cycles, out.string());
}

// --- tune ------------------------------------------------------------------

struct TuneArgs {
  fs::path train;
  tuner::GridSpec grid;
  nn::TrainConfig optimizer;
  std::string activation = "relu";
  unsigned jobs = 1;
};

void cmd_tune(const SharedOptions& shared, TuneArgs args) {
  const auto param = shared.parameter();
  args.grid.seed = shared.seed;
  const auto prepared = pipeline::prepare(io::read_csv_file(args.train), shared.prepare());
  const auto slice = tuner::tuning_slice(prepared.pairs.pairs, args.grid.tuning_cycles);
  if (static_cast<int>(slice.size()) < args.grid.tuning_cycles) {
    spdlog::warn("tuning slice has only {} cycles", slice.size());
  }
  spdlog::info("tuning {} candidates on {} {} pairs for {} epochs", args.grid.depths.size() * args.grid.widths.size(),
               slice.size(), to_string(param), args.grid.tuning_epochs);
  const auto result = tuner::tune(args.grid, slice, args.optimizer, args.jobs, nn::parse_activation(args.activation));
  const auto stem = std::string(to_string(param));
  io::write_atomic(shared.out_dir / (stem + "_tuning.csv"),
                   [&](std::ostream& o) { tuner::write_ranked_csv(o, result.ranked); });
  write_json(shared.out_dir / (stem + "_architecture.json"), io::architecture_to_json(result.selected));
  const auto& best = result.ranked.front();
  spdlog::info("selected depth {} width {} ({} parameters, loss {})", best.depth, best.width, best.param_count,
               best.final_loss);
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  fs::path train;
  fs::path val;
  fs::path arch;
  int depth = 0;
  std::size_t width = 0;
  std::string activation = "relu";
  nn::TrainConfig cfg;
};

void cmd_train(const SharedOptions& shared, TrainArgs args) {
  const auto opts = shared.prepare();
  nn::Architecture arch;
  if (!args.arch.empty()) {
    arch = io::architecture_from_json(nlohmann::json::parse(io::read_text(args.arch)));
    if (arch.input_dim() != opts.length || arch.output_dim() != opts.length) {
      throw ConfigError("architecture file maps " + std::to_string(arch.input_dim()) + " -> " +
                        std::to_string(arch.output_dim()) + " but --length is " + std::to_string(opts.length));
    }
  } else if (args.depth > 0 && args.width > 0) {
    tuner::GridSpec one;
    one.depths = {args.depth};
    one.widths = {args.width};
    arch = tuner::enumerate_grid(one, opts.length, opts.length, nn::parse_activation(args.activation)).front().arch;
  } else {
    throw ConfigError("train needs --arch or both --depth and --width");
  }
  args.cfg.seed = shared.seed;

  const auto prepared = pipeline::prepare(io::read_csv_file(args.train), opts);
  spdlog::info("training {} nets on {} pairs for {} epochs ({} parameters each)", to_string(opts.parameter),
               prepared.pairs.pairs.size(), args.cfg.epochs, nn::param_count(arch));
  auto trained = pipeline::train_coupled(arch, prepared.pairs, args.cfg);

  std::vector<AlignedPair> validation = prepared.pairs.pairs;
  if (!args.val.empty()) {
    validation = pipeline::prepare(io::read_csv_file(args.val), opts, prepared.stats).pairs.pairs;
  }
  const double e = coupled::calibrate_hop_error(trained.model, validation);
  spdlog::info("calibrated hop error {} on {} {} pairs", e, validation.size(),
               args.val.empty() ? "training" : "validation");

  io::save_model_file(trained.model.charge_net, model_path(shared.out_dir, opts.parameter, Direction::to_charge));
  io::save_model_file(trained.model.discharge_net,
                      model_path(shared.out_dir, opts.parameter, Direction::to_discharge));
  io::write_atomic(shared.out_dir / (std::string(to_string(opts.parameter)) + "_loss.csv"), [&](std::ostream& o) {
    o << "epoch,charge_loss,discharge_loss\n";
    for (std::size_t i = 0; i < trained.charge_loss.size(); ++i) {
      o << i + 1 << ',' << fmt_real(trained.charge_loss[i]) << ',' << fmt_real(trained.discharge_loss[i]) << '\n';
    }
  });
}

// --- generate --------------------------------------------------------------

struct GenerateArgs {
  fs::path model_dir;
  fs::path seed_csv;
  std::string seed_cell;
  int seed_cycle = 1;
  std::string seed_phase = "charge";
  double threshold = std::numeric_limits<double>::infinity();
  int max_hops = 100;
  double time_step = 1.0;
  std::vector<double> bounds;
};

void cmd_generate(const SharedOptions& shared, const GenerateArgs& args) {
  if (shared.params.empty()) throw ConfigError("generate needs at least one --param");
  if (!args.bounds.empty() && (args.bounds.size() != 2 || shared.params.size() != 1)) {
    throw ConfigError("--bounds takes LO HI and a single --param");
  }
  const auto samples = io::read_csv_file(args.seed_csv);
  if (samples.empty()) throw DataError(args.seed_csv.string() + ": no samples");
  const std::string cell = args.seed_cell.empty() ? samples.front().cell_id : args.seed_cell;
  const Phase phase = parse_phase(args.seed_phase);

  std::vector<coupled::GenerationChain> chains;
  std::vector<NormStats> stats;
  std::vector<Parameter> params;
  for (const auto& name : shared.params) params.push_back(parse_parameter(name));

  nlohmann::json sidecar = nlohmann::json::array();
  for (const auto param : params) {
    const auto model = load_coupled(args.model_dir, param);
    const pipeline::PrepareOptions opts{param, model.length(), shared.reference_mah};
    const auto prepared = pipeline::prepare(samples, opts, model.stats());
    const auto seed = pipeline::seed_profile(prepared.pairs, cell, args.seed_cycle, phase);
    std::optional<coupled::PhysicalBounds> bounds;
    if (!args.bounds.empty()) bounds = coupled::PhysicalBounds{args.bounds[0], args.bounds[1]};
    chains.push_back(coupled::generate_chain(model, seed, args.threshold, args.max_hops, bounds));
    stats.push_back(model.stats());
    const auto& chain = chains.back();
    spdlog::info("{}: {} hops, stop reason {}, accumulated error {}", to_string(param), chain.hops.size(),
                 coupled::to_string(chain.stop_reason), chain.accumulated_error);
    sidecar.push_back(coupled::chain_metadata(chain, param));
  }
  std::vector<coupled::ParameterChain> exports;
  for (std::size_t i = 0; i < params.size(); ++i) exports.push_back({params[i], &chains[i], stats[i]});

  coupled::ExportOptions export_opts;
  export_opts.reference_mah = shared.reference_mah;
  export_opts.time_step_s = args.time_step;
  io::write_atomic(shared.out_dir / "synthetic.csv",
                   [&](std::ostream& o) { coupled::export_chains(exports, o, export_opts); });
  write_json(shared.out_dir / "chain.json", {{"chains", sidecar}});
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  fs::path model_dir;
  fs::path test;
  bool drive_cycle = false;
};

void cmd_eval(const SharedOptions& shared, const EvalArgs& args) {
  const auto param = shared.parameter();
  if (args.drive_cycle && param != Parameter::soc) throw ConfigError("--drive-cycle reports SOC; use --param soc");
  const auto model = load_coupled(args.model_dir, param);
  const pipeline::PrepareOptions opts{param, model.length(), shared.reference_mah};
  const auto prepared = pipeline::prepare(io::read_csv_file(args.test), opts, model.stats());
  const auto report = metrics::evaluate(model, prepared.pairs.pairs);

  const auto stem = std::string(to_string(param));
  nlohmann::json summary = {{"parameter", stem}};
  if (args.drive_cycle) summary["mode"] = "drive_cycle";
  for (const auto d : {Direction::to_charge, Direction::to_discharge}) {
    const auto& r = report.of(d);
    const auto name = std::string(to_string(d));
    io::write_atomic(shared.out_dir / (stem + "_eval_" + name + ".csv"),
                     [&](std::ostream& o) { metrics::write_per_cycle_csv(o, r); });
    auto block = metrics::aggregate_json(r);
    if (args.drive_cycle) block = {{"cycles", r.per_cycle.size()}, {"mae", r.aggregate.mae}, {"rmse", r.aggregate.rmse}};
    summary[name + "_net"] = block;
    spdlog::info("{}Net-{}: mse {} mae {} rmse {} over {} cycles", d == Direction::to_charge ? "Charge" : "Discharge",
                 stem, r.aggregate.mse, r.aggregate.mae, r.aggregate.rmse, r.per_cycle.size());
  }
  write_json(shared.out_dir / (stem + "_eval.json"), summary);
}

// --- plot ------------------------------------------------------------------

struct PlotArgs {
  fs::path model_dir;
  fs::path data;
  std::string cell;
  int cycle = 1;
  std::string direction = "discharge";
};

void cmd_plot(const SharedOptions& shared, const PlotArgs& args) {
  const auto param = shared.parameter();
  const auto direction = parse_direction(args.direction);
  const auto model = load_coupled(args.model_dir, param);
  const auto samples = io::read_csv_file(args.data);
  if (samples.empty()) throw DataError(args.data.string() + ": no samples");
  const std::string cell = args.cell.empty() ? samples.front().cell_id : args.cell;
  const pipeline::PrepareOptions opts{param, model.length(), shared.reference_mah};
  const auto prepared = pipeline::prepare(samples, opts, model.stats());

  const AlignedPair* pair = nullptr;
  for (const auto& p : prepared.pairs.pairs) {
    if (p.direction == direction && p.cell_id == cell && p.target_cycle == args.cycle) pair = &p;
  }
  if (pair == nullptr) {
    throw DataError("no " + args.direction + " target for " + cell + " cycle " + std::to_string(args.cycle));
  }
  const auto& net = model.net_for(direction);
  const auto truth = data::denormalize(pair->target, net.output_stats);
  const auto predicted = data::denormalize(nn::forward(net, pair->input), net.output_stats);

  const auto stem = std::string(to_string(param)) + "_" + args.direction + "_" + cell + "_c" + std::to_string(args.cycle);
  io::write_atomic(shared.out_dir / (stem + ".csv"),
                   [&](std::ostream& o) { plot::write_overlay_csv(o, truth, predicted); });
  static const std::map<Parameter, std::string> units{
      {Parameter::voltage, "voltage (V)"}, {Parameter::soc, "state of charge (%)"},
      {Parameter::temperature, "temperature (C)"}};
  const std::string title = std::string(direction == Direction::to_charge ? "ChargeNet" : "DischargeNet") + " " +
                            std::string(to_string(param)) + ", " + cell + " cycle " + std::to_string(args.cycle);
  io::write_atomic(shared.out_dir / (stem + ".svg"),
                   [&](std::ostream& o) { plot::write_overlay_svg(o, truth, predicted, title, units.at(param)); });
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("cyclegen");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("CYCLEGEN_LOG"); level != nullptr && *level != '\0') {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

void add_optimizer_options(CLI::App* cmd, nn::TrainConfig& cfg) {
  cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--beta1", cfg.beta1, "Adam beta1")->capture_default_str();
  cmd->add_option("--beta2", cfg.beta2, "Adam beta2")->capture_default_str();
  cmd->add_option("--epsilon", cfg.epsilon, "Adam epsilon")->capture_default_str();
  cmd->add_option("--batch-size", cfg.batch_size, "minibatch size")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Coupled ChargeNet/DischargeNet battery cycle augmentation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; command-line flags take precedence");
  app.option_defaults()->always_capture_default();

  SharedOptions shared;
  app.add_option("--seed", shared.seed, "seed for every random stream");
  app.add_option("--out-dir", shared.out_dir, "output directory");
  app.add_option("--param", shared.params, "battery parameter: voltage|soc|temperature")
      ->check(CLI::IsMember({"voltage", "soc", "temperature"}));
  app.add_option("--length", shared.length, "samples per phase profile fed to the networks")
      ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
  app.add_option("--reference-mah", shared.reference_mah, "SOC reference capacity in mAh")
      ->check(CLI::PositiveNumber);

  FixtureArgs fixture;
  auto* fixture_cmd = app.add_subcommand("fixture", "write a synthetic pseudo-battery dataset");
  fixture_cmd->add_option("--cells", fixture.spec.n_cells, "number of cells");
  fixture_cmd->add_option("--cycles", fixture.spec.n_cycles, "cycles per cell");
  fixture_cmd->add_option("--raw-length", fixture.spec.raw_length, "samples per charge phase");
  fixture_cmd->add_option("--fade-rate", fixture.spec.fade_rate, "capacity fraction lost per cycle");
  fixture_cmd->add_option("--first-cell", fixture.spec.first_cell, "number of the first cell");
  fixture_cmd->add_option("--out", fixture.out, "output CSV (default <out-dir>/fixture.csv)");

  TuneArgs tune;
  auto* tune_cmd = app.add_subcommand("tune", "rank candidate architectures on a small slice");
  tune_cmd->add_option("--train", tune.train, "training CSV")->required()->check(CLI::ExistingFile);
  tune_cmd->add_option("--depths", tune.grid.depths, "weight-layer counts")->delimiter(',');
  tune_cmd->add_option("--widths", tune.grid.widths, "hidden widths")->delimiter(',');
  tune_cmd->add_option("--tuning-cycles", tune.grid.tuning_cycles, "cycles in the tuning slice");
  tune_cmd->add_option("--epochs", tune.grid.tuning_epochs, "training epochs per candidate");
  tune_cmd->add_option("--activation", tune.activation, "hidden activation")->check(CLI::IsMember({"relu", "tanh"}));
  tune_cmd->add_option("--jobs", tune.jobs, "candidates trained concurrently");
  add_optimizer_options(tune_cmd, tune.optimizer);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train ChargeNet and DischargeNet");
  train_cmd->add_option("--train", train.train, "training CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--val", train.val, "validation CSV for hop-error calibration")->check(CLI::ExistingFile);
  train_cmd->add_option("--arch", train.arch, "architecture file written by tune")->check(CLI::ExistingFile);
  train_cmd->add_option("--depth", train.depth, "weight layers (without --arch)");
  train_cmd->add_option("--width", train.width, "hidden width (without --arch)");
  train_cmd->add_option("--activation", train.activation, "hidden activation (without --arch)")
      ->check(CLI::IsMember({"relu", "tanh"}));
  train_cmd->add_option("--epochs", train.cfg.epochs, "training epochs");
  add_optimizer_options(train_cmd, train.cfg);

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "chain the nets to synthesize cycles");
  gen_cmd->add_option("--model-dir", gen.model_dir, "directory with model files")->required()->check(CLI::ExistingDirectory);
  gen_cmd->add_option("--seed-csv", gen.seed_csv, "CSV holding the seed cycle")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--seed-cell", gen.seed_cell, "seed cell (default: first in file)");
  gen_cmd->add_option("--seed-cycle", gen.seed_cycle, "seed cycle index");
  gen_cmd->add_option("--seed-phase", gen.seed_phase, "phase the chain starts from")
      ->check(CLI::IsMember({"charge", "discharge"}));
  gen_cmd->add_option("--threshold", gen.threshold, "accumulated-error threshold (normalized units)");
  gen_cmd->add_option("--max-hops", gen.max_hops, "maximum hops");
  gen_cmd->add_option("--time-step", gen.time_step, "seconds between synthetic samples");
  gen_cmd->add_option("--bounds", gen.bounds, "physical bounds LO HI overriding the defaults")->expected(2);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "per-cycle MSE/MAE/RMSE on a test set");
  eval_cmd->add_option("--model-dir", eval.model_dir, "directory with model files")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--test", eval.test, "test CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_flag("--drive-cycle", eval.drive_cycle, "dynamic drive-cycle SOC report (MAE/RMSE)");

  PlotArgs plot_args;
  auto* plot_cmd = app.add_subcommand("plot", "truth vs prediction overlay for one cycle");
  plot_cmd->add_option("--model-dir", plot_args.model_dir, "directory with model files")->required()->check(CLI::ExistingDirectory);
  plot_cmd->add_option("--data", plot_args.data, "CSV holding the cycle")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--cell", plot_args.cell, "cell (default: first in file)");
  plot_cmd->add_option("--cycle", plot_args.cycle, "target cycle index");
  plot_cmd->add_option("--direction", plot_args.direction, "net to plot: charge|discharge")
      ->check(CLI::IsMember({"charge", "discharge"}));

  for (auto* cmd : app.get_subcommands({})) cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*fixture_cmd) cmd_fixture(shared, fixture);
    if (*tune_cmd) cmd_tune(shared, tune);
    if (*train_cmd) cmd_train(shared, train);
    if (*gen_cmd) cmd_generate(shared, gen);
    if (*eval_cmd) cmd_eval(shared, eval);
    if (*plot_cmd) cmd_plot(shared, plot_args);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const DivergenceError& e) {
    spdlog::error("{}", e.what());
    return kExitDivergence;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  }
  return 0;
}
