// Copyright 2026 The ETID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// etid: train, unlearn, evaluate and sweep from one JSON config.
//
// Exit codes: 0 success, 1 runtime failure, 2 invalid config or input,
// 3 reference validity expired. Failures print one JSON record on stderr.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "etid/experiment.h"
#include "json.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitValidity = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::string> output;
  std::optional<double> unlearn_ratio;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_seeds;
  std::optional<std::size_t> k;
  std::optional<std::vector<std::string>> methods;
  std::optional<std::size_t> jobs;
  bool parallel = false;
  bool serial = false;
};

void AddCommon(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON config file");
  cmd->add_option("-o,--output", o.output, "output root directory");
  cmd->add_option("--unlearn-ratio", o.unlearn_ratio, "fraction of D to erase");
  cmd->add_option("--seed", o.seed, "first experiment seed");
  cmd->add_option("--seeds", o.n_seeds, "number of experiment seeds");
  cmd->add_option("-k,--k", o.k, "number of parts");
  cmd->add_option("--methods", o.methods, "methods to run");
  cmd->add_option("-j,--jobs", o.jobs, "worker cap (0 = hardware)");
  auto* par = cmd->add_flag("--parallel", o.parallel, "parallel sub-model work");
  cmd->add_flag("--serial", o.serial, "serial sub-model work")->excludes(par);
}

etid::ExperimentConfig Resolve(const Overrides& o) {
  etid::ExperimentConfig c =
      o.config_path.empty() ? etid::ExperimentConfig() : etid::LoadConfig(o.config_path);
  if (o.output) c.output_dir = *o.output;
  if (o.unlearn_ratio) c.unlearn_ratio = *o.unlearn_ratio;
  if (o.seed) c.base_seed = *o.seed;
  if (o.n_seeds) c.n_seeds = *o.n_seeds;
  if (o.k) c.k = *o.k;
  if (o.methods) c.methods = *o.methods;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.parallel) c.parallel = true;
  if (o.serial) c.parallel = false;
  c.Validate();
  return c;
}

int Fail(int code, const std::string& kind, const std::string& message,
         const std::vector<std::string>& fields = {}) {
  nlohmann::json record = {{"error", kind},
                           {"message", message},
                           {"exit_code", code}};
  if (!fields.empty()) record["fields"] = fields;
  std::cerr << record.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ETID machine unlearning experiments"};
  app.require_subcommand(1);
  Overrides o;
  std::string csv_out = "dataset.csv";
  std::optional<std::string> request_path;

  auto* gen = app.add_subcommand("gen-data", "write the synthetic dataset as CSV");
  AddCommon(gen, o);
  gen->add_option("--out", csv_out, "CSV output path");
  auto* train = app.add_subcommand("train", "train target models");
  AddCommon(train, o);
  auto* unlearn = app.add_subcommand("unlearn", "erase the unlearning request");
  AddCommon(unlearn, o);
  unlearn->add_option("--request", request_path,
                      "file of sample ids to erase (one per line)");
  auto* evaluate = app.add_subcommand("evaluate", "score unlearned models");
  AddCommon(evaluate, o);
  auto* bench = app.add_subcommand("bench", "train, unlearn and evaluate");
  AddCommon(bench, o);
  auto* sweep = app.add_subcommand("sweep", "sensitivity sweeps over K and ratio");
  AddCommon(sweep, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return Fail(kExitConfig, "usage", e.what());
  }

  try {
    const etid::ExperimentConfig config = Resolve(o);
    if (gen->parsed()) {
      etid::CmdGenData(config, csv_out);
      std::cout << "wrote " << csv_out << '\n';
    } else if (train->parsed()) {
      etid::CmdTrain(config);
      std::cout << "trained targets under " << config.OutputRoot().string()
                << '\n';
    } else if (unlearn->parsed()) {
      std::optional<etid::UnlearnRequest> request;
      if (request_path) request = etid::LoadRequest(*request_path);
      etid::CmdUnlearn(config, request);
      std::cout << "unlearned under " << config.OutputRoot().string() << '\n';
    } else if (evaluate->parsed()) {
      std::cout << etid::SummaryTable(etid::CmdEvaluate(config));
    } else if (bench->parsed()) {
      std::cout << etid::SummaryTable(etid::CmdBench(config));
    } else if (sweep->parsed()) {
      const auto rows = etid::CmdSweep(config);
      std::cout << "wrote " << rows.size() << " rows to "
                << (config.OutputRoot() / "sweep.csv").string() << '\n';
    }
  } catch (const etid::ConfigError& e) {
    return Fail(kExitConfig, "config", e.what(), e.fields());
  } catch (const etid::ValidityExpiredError& e) {
    return Fail(kExitValidity, "validity_expired", e.what());
  } catch (const etid::ValidationError& e) {
    return Fail(kExitConfig, "validation", e.what());
  } catch (const etid::ParseError& e) {
    return Fail(kExitConfig, "parse", e.what());
  } catch (const std::exception& e) {
    return Fail(kExitRuntime, "runtime", e.what());
  }
  return 0;
}
