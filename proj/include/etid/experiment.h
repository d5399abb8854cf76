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

// Config-driven experiment pipeline behind the `etid` command-line tool.
//
// Output layout under config.output_dir:
//   data/dataset.csv, data/split.json, data/<seed>/request.json
//   <method>/<seed>/target/       model before erasure
//   <method>/<seed>/unlearned/    model after erasure
//   <method>/<seed>/report.json   unlearning report (with timings)
//   <method>/<seed>/metrics.json  evaluation
//   metrics.csv                   one row per (method, seed)

#ifndef ETID_EXPERIMENT_H_
#define ETID_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "etid/dataset.h"
#include "etid/errors.h"
#include "etid/eval.h"
#include "etid/nn.h"
#include "etid/roel.h"
#include "json.hpp"

namespace etid {

inline constexpr int kConfigVersion = 1;
inline constexpr const char* kOutputRootEnv = "ETID_OUTPUT_ROOT";

// Config validation failure; one message per offending field.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> fields);
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  std::vector<std::string> fields_;
};

struct DatasetConfig {
  std::string source = "synthetic";  // or "csv"
  SyntheticSpec synthetic{.n = 5000,
                          .features = 20,
                          .classes = 5,
                          .cluster_spread = 3.0,
                          .seed = 7};
  std::string csv_path;
  // 3990 of 5000 rows: divisible by every swept K, so parts are equal.
  double train_ratio = 0.798;
};

struct ExperimentConfig {
  int format_version = kConfigVersion;
  DatasetConfig dataset;
  std::size_t k = 5;
  double unlearn_ratio = 0.01;
  std::vector<std::size_t> hidden{32};
  TrainConfig train{.learning_rate = 0.05,
                    .epochs = 10,
                    .batch_size = 32,
                    .seed = 0,
                    .shuffle = true,
                    .loss = LossKind::kCrossEntropy,
                    .stop_below = 0.0};
  TrainConfig distill;
  TrainConfig rectify;
  TrainConfig relabel{.learning_rate = 0.05,
                      .epochs = 5,
                      .batch_size = 32,
                      .seed = 0,
                      .shuffle = true,
                      .loss = LossKind::kCrossEntropy,
                      .stop_below = 0.0};
  AttackConfig attack;
  std::size_t mi_resamples = 5;
  std::vector<std::string> methods{"etid", "retrain_single",
                                   "retrain_ensemble", "sisa", "relabel"};
  std::size_t n_seeds = 5;
  std::uint64_t base_seed = 1;
  bool parallel = true;
  std::size_t jobs = 0;
  std::string output_dir;
  std::vector<std::size_t> sweep_k{3, 5, 7, 10};
  std::vector<double> sweep_unlearn_ratio{0.001, 0.005, 0.01, 0.05, 0.1};

  ExperimentConfig();

  // Throws ConfigError listing every invalid field.
  void Validate() const;
  std::vector<std::uint64_t> Seeds() const;
  // output_dir, else $ETID_OUTPUT_ROOT, else "etid-out".
  std::filesystem::path OutputRoot() const;
  bool HasMethod(const std::string& name) const;
};

nlohmann::json ToJson(const ExperimentConfig& config);
// Unknown keys and type mismatches are reported as ConfigError.
ExperimentConfig ConfigFromJson(const nlohmann::json& j);
ExperimentConfig LoadConfig(const std::filesystem::path& path);

// Single model or ensemble, persisted as model.ckpt or an ensemble dir.
using AnyModel = std::variant<MlpModel, Ensemble>;

Matrix Predict(const AnyModel& model, const Matrix& x);
void SaveModel(const AnyModel& model, const std::filesystem::path& dir);
AnyModel LoadModel(const std::filesystem::path& dir);

// Generates or loads the configured dataset.
Dataset MaterializeDataset(const ExperimentConfig& config);

void CmdGenData(const ExperimentConfig& config,
                const std::filesystem::path& csv_out);
// Trains every method's target model for every seed.
void CmdTrain(const ExperimentConfig& config);
// Applies every method's erasure. `request` overrides the sampled request.
void CmdUnlearn(const ExperimentConfig& config,
                const std::optional<UnlearnRequest>& request = std::nullopt);
// Writes metrics.json per (method, seed) and metrics.csv.
std::vector<MetricsReport> CmdEvaluate(const ExperimentConfig& config);
// Train, unlearn and evaluate in sequence.
std::vector<MetricsReport> CmdBench(const ExperimentConfig& config);

struct SweepRow {
  std::string axis;  // "k" or "unlearn_ratio"
  MetricsReport metrics;
};

// One-at-a-time sweeps: every sweep_k at the default ratio, then every
// sweep_unlearn_ratio at the default K. Writes sweep.csv.
std::vector<SweepRow> CmdSweep(const ExperimentConfig& config);

// Median-over-seeds table of the main metrics, one line per method.
std::string SummaryTable(const std::vector<MetricsReport>& reports);

}  // namespace etid

#endif  // ETID_EXPERIMENT_H_
