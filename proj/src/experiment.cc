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

#include "etid/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "etid/baselines.h"
#include "etid/random.h"
#include "etid/serialization.h"
#include "etid/tid.h"
#include "etid/timing.h"

namespace etid {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kKnownMethods{
    "etid", "retrain_single", "retrain_ensemble", "sisa", "relabel"};

std::string JoinFields(const std::vector<std::string>& fields) {
  std::string out = "invalid config:";
  for (const auto& f : fields) out += "\n  " + f;
  return out;
}

// Collects field-level errors while decoding a JSON object.
class FieldReader {
 public:
  FieldReader(const json& j, std::string prefix,
              std::vector<std::string>& errors)
      : j_(j), prefix_(std::move(prefix)), errors_(errors) {
    if (!j_.is_object()) {
      errors_.push_back(Path("") + ": expected an object");
      ok_ = false;
    }
  }

  template <typename T>
  void Read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!ok_ || !j_.contains(key)) return;
    try {
      StrictGetTo(j_.at(key), out);
    } catch (const std::exception& e) {
      errors_.push_back(Path(key) + ": " + e.what());
    }
  }

  void ReadTrain(const std::string& key, TrainConfig& out) {
    seen_.insert(key);
    if (!ok_ || !j_.contains(key)) return;
    try {
      from_json(j_.at(key), out);
    } catch (const std::exception& e) {
      errors_.push_back(Path(key) + ": " + e.what());
    }
  }

  const json* Child(const std::string& key) {
    seen_.insert(key);
    if (!ok_ || !j_.contains(key)) return nullptr;
    return &j_.at(key);
  }

  void RejectUnknown() {
    if (!ok_) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) errors_.push_back(Path(key) + ": unknown key");
    }
  }

  std::string Path(const std::string& key) const {
    if (prefix_.empty()) return key;
    return key.empty() ? prefix_ : prefix_ + "." + key;
  }

 private:
  const json& j_;
  std::string prefix_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
  bool ok_ = true;
};

void CheckTrainConfig(const std::string& name, const TrainConfig& c,
                      LossKind expected, std::vector<std::string>& errors) {
  try {
    c.Validate();
  } catch (const ValidationError& e) {
    errors.push_back(name + ": " + e.what());
  }
  if (c.loss != expected) {
    errors.push_back(name + ".loss: must be " +
                     std::string(LossKindName(expected)));
  }
}

TrainConfig Seeded(const TrainConfig& c, std::uint64_t seed,
                   std::string_view purpose) {
  TrainConfig out = c;
  out.seed = DeriveSeed(seed, purpose, c.seed);
  return out;
}

ExecPolicy Exec(const ExperimentConfig& c, bool parallel) {
  return {.parallel = parallel, .jobs = c.jobs};
}

fs::path DataDir(const ExperimentConfig& c) { return c.OutputRoot() / "data"; }

fs::path RunDir(const ExperimentConfig& c, const std::string& method,
                std::uint64_t seed) {
  return c.OutputRoot() / method / std::to_string(seed);
}

Dataset Without(const Dataset& data, const IdSet& drop) {
  std::vector<std::size_t> rows;
  rows.reserve(data.size());
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (!Contains(drop, data.ids()[r])) rows.push_back(r);
  }
  return data.SubsetRows(rows);
}

struct Workspace {
  Dataset full;
  Dataset train;
  Dataset test;
};

Workspace LoadWorkspace(const ExperimentConfig& config) {
  const fs::path dir = DataDir(config);
  if (!fs::exists(dir / "dataset.csv") || !fs::exists(dir / "split.json")) {
    throw ValidationError("no training data under " + dir.string() +
                          "; run `train` first");
  }
  Workspace ws;
  ws.full = LoadCsv(dir / "dataset.csv");
  const json split = ReadJsonFile(dir / "split.json");
  const auto train_ids = split.at("train_ids").get<std::vector<SampleId>>();
  const auto test_ids = split.at("test_ids").get<std::vector<SampleId>>();
  ws.train = ws.full.Subset(train_ids);
  ws.test = ws.full.Subset(test_ids);
  return ws;
}

UnlearnRequest LoadRequestJson(const fs::path& path) {
  const json j = ReadJsonFile(path);
  return {MakeIdSet(j.at("sample_ids").get<std::vector<SampleId>>())};
}

bool SameModel(const AnyModel& a, const AnyModel& b) {
  if (a.index() != b.index()) return false;
  if (const auto* m = std::get_if<MlpModel>(&a)) {
    return *m == std::get<MlpModel>(b);
  }
  return std::get<Ensemble>(a).sub_models == std::get<Ensemble>(b).sub_models;
}

struct ErasureRun {
  AnyModel unlearned;
  double seconds = 0.0;
  json details;
};

ErasureRun RunErasure(const std::string& method, const AnyModel& target,
                      const ExperimentConfig& config, std::uint64_t seed,
                      const Dataset& train, const Dataset& remaining,
                      const Dataset& unlearn, const UnlearnRequest& request,
                      bool parallel) {
  const ExecPolicy exec = Exec(config, parallel);
  const TrainConfig train_cfg = Seeded(config.train, seed, "train");
  ErasureRun run;
  if (method == "etid") {
    Ensemble e = std::get<Ensemble>(target);
    UnlearnConfig uc;
    uc.distill = Seeded(config.distill, seed, "distill");
    uc.rectify = Seeded(config.rectify, seed, "rectify");
    uc.exec = exec;
    UnlearnReport report;
    run.seconds = TimePhase([&] { report = HandleRequest(e, train, request, uc); });
    run.details = ToJson(report);
    run.unlearned = std::move(e);
  } else if (method == "retrain_ensemble") {
    Ensemble e;
    run.seconds = TimePhase([&] {
      e = RetrainEnsemble(remaining, config.k, config.hidden, train_cfg, exec);
    });
    run.unlearned = std::move(e);
  } else if (method == "retrain_single") {
    MlpModel m;
    run.seconds = TimePhase(
        [&] { m = RetrainSingle(remaining, config.hidden, train_cfg); });
    run.unlearned = std::move(m);
  } else if (method == "sisa") {
    Ensemble e = std::get<Ensemble>(target);
    SisaOutcome outcome;
    run.seconds =
        TimePhase([&] { outcome = SisaUnlearn(e, train, request, exec); });
    run.details = {{"retrained_slots", outcome.retrained_slots}};
    run.unlearned = std::move(e);
  } else if (method == "relabel") {
    MlpModel m = std::get<MlpModel>(target);
    const TrainConfig cfg = Seeded(config.relabel, seed, "relabel");
    run.seconds = TimePhase([&] { m = RelabelUnlearn(std::move(m), unlearn, cfg); });
    run.unlearned = std::move(m);
  } else {
    throw ValidationError("unknown method '" + method + "'");
  }
  return run;
}

std::optional<std::string> Counterpart(const std::string& method) {
  if (method == "etid") return "retrain_ensemble";
  if (method == "relabel") return "retrain_single";
  if (method == "retrain_single" || method == "retrain_ensemble" ||
      method == "sisa") {
    return method;  // exact retraining is its own reference
  }
  return std::nullopt;
}

double Median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string FormatDouble(double v, int precision) {
  if (std::isnan(v)) return "-";
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(precision);
  s << v;
  return s.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> fields)
    : ValidationError(JoinFields(fields)), fields_(std::move(fields)) {}

ExperimentConfig::ExperimentConfig() {
  const UnlearnConfig defaults;
  distill = defaults.distill;
  rectify = defaults.rectify;
}

void ExperimentConfig::Validate() const {
  std::vector<std::string> errors;
  if (format_version != kConfigVersion) {
    errors.push_back("format_version: expected " +
                     std::to_string(kConfigVersion));
  }
  if (dataset.source == "synthetic") {
    const auto& s = dataset.synthetic;
    if (s.classes < 2) errors.push_back("dataset.classes: must be >= 2");
    if (s.n < s.classes) errors.push_back("dataset.n: must be >= classes");
    if (s.features < 1) errors.push_back("dataset.features: must be >= 1");
    if (!(s.cluster_spread >= 0.0)) {
      errors.push_back("dataset.cluster_spread: must be >= 0");
    }
  } else if (dataset.source == "csv") {
    if (dataset.csv_path.empty() || !fs::exists(dataset.csv_path)) {
      errors.push_back("dataset.csv_path: file '" + dataset.csv_path +
                       "' does not exist");
    }
  } else {
    errors.push_back("dataset.source: must be 'synthetic' or 'csv'");
  }
  if (!(dataset.train_ratio > 0.0 && dataset.train_ratio < 1.0)) {
    errors.push_back("dataset.train_ratio: must be in (0, 1)");
  }
  const bool needs_roel = HasMethod("etid") || HasMethod("retrain_ensemble");
  if (needs_roel && k < kMinEnsembleParts) {
    errors.push_back("k: must be >= 3 for leave-one-out ensembles");
  }
  if (k < 2) errors.push_back("k: must be >= 2");
  if (!(unlearn_ratio > 0.0 && unlearn_ratio < 1.0)) {
    errors.push_back("unlearn_ratio: must be in (0, 1)");
  }
  for (std::size_t h : hidden) {
    if (h == 0) errors.push_back("hidden: layer widths must be positive");
  }
  CheckTrainConfig("train", train, LossKind::kCrossEntropy, errors);
  CheckTrainConfig("distill", distill, LossKind::kKlToTargets, errors);
  CheckTrainConfig("rectify", rectify, LossKind::kCrossEntropy, errors);
  CheckTrainConfig("relabel", relabel, LossKind::kCrossEntropy, errors);
  CheckTrainConfig("attack.train", attack.train, LossKind::kCrossEntropy,
                   errors);
  if (attack.hidden == 0) errors.push_back("attack.hidden: must be positive");
  if (mi_resamples < 2) errors.push_back("attack.resamples: must be >= 2");
  if (methods.empty()) errors.push_back("methods: must not be empty");
  for (const auto& m : methods) {
    if (!kKnownMethods.contains(m)) {
      errors.push_back("methods: unknown method '" + m + "'");
    }
  }
  if (n_seeds < 1) errors.push_back("n_seeds: must be >= 1");
  for (std::size_t v : sweep_k) {
    if (v < kMinEnsembleParts) errors.push_back("sweep.k: values must be >= 3");
  }
  for (double v : sweep_unlearn_ratio) {
    if (!(v > 0.0 && v < 1.0)) {
      errors.push_back("sweep.unlearn_ratio: values must be in (0, 1)");
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
}

std::vector<std::uint64_t> ExperimentConfig::Seeds() const {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < n_seeds; ++i) seeds.push_back(base_seed + i);
  return seeds;
}

fs::path ExperimentConfig::OutputRoot() const {
  if (!output_dir.empty()) return output_dir;
  if (const char* env = std::getenv(kOutputRootEnv); env && *env) return env;
  return "etid-out";
}

bool ExperimentConfig::HasMethod(const std::string& name) const {
  return std::find(methods.begin(), methods.end(), name) != methods.end();
}

json ToJson(const ExperimentConfig& c) {
  return {{"format_version", c.format_version},
          {"dataset",
           {{"source", c.dataset.source},
            {"n", c.dataset.synthetic.n},
            {"features", c.dataset.synthetic.features},
            {"classes", c.dataset.synthetic.classes},
            {"cluster_spread", c.dataset.synthetic.cluster_spread},
            {"seed", c.dataset.synthetic.seed},
            {"csv_path", c.dataset.csv_path},
            {"train_ratio", c.dataset.train_ratio}}},
          {"k", c.k},
          {"unlearn_ratio", c.unlearn_ratio},
          {"hidden", c.hidden},
          {"train", c.train},
          {"distill", c.distill},
          {"rectify", c.rectify},
          {"relabel", c.relabel},
          {"attack",
           {{"hidden", c.attack.hidden},
            {"train", c.attack.train},
            {"resamples", c.mi_resamples}}},
          {"methods", c.methods},
          {"n_seeds", c.n_seeds},
          {"base_seed", c.base_seed},
          {"parallel", c.parallel},
          {"jobs", c.jobs},
          {"output_dir", c.output_dir},
          {"sweep",
           {{"k", c.sweep_k}, {"unlearn_ratio", c.sweep_unlearn_ratio}}}};
}

ExperimentConfig ConfigFromJson(const json& j) {
  ExperimentConfig c;
  std::vector<std::string> errors;
  FieldReader top(j, "", errors);
  top.Read("format_version", c.format_version);
  if (const json* d = top.Child("dataset")) {
    FieldReader r(*d, "dataset", errors);
    r.Read("source", c.dataset.source);
    r.Read("n", c.dataset.synthetic.n);
    r.Read("features", c.dataset.synthetic.features);
    r.Read("classes", c.dataset.synthetic.classes);
    r.Read("cluster_spread", c.dataset.synthetic.cluster_spread);
    r.Read("seed", c.dataset.synthetic.seed);
    r.Read("csv_path", c.dataset.csv_path);
    r.Read("train_ratio", c.dataset.train_ratio);
    r.RejectUnknown();
  }
  top.Read("k", c.k);
  top.Read("unlearn_ratio", c.unlearn_ratio);
  top.Read("hidden", c.hidden);
  top.ReadTrain("train", c.train);
  top.ReadTrain("distill", c.distill);
  top.ReadTrain("rectify", c.rectify);
  top.ReadTrain("relabel", c.relabel);
  if (const json* a = top.Child("attack")) {
    FieldReader r(*a, "attack", errors);
    r.Read("hidden", c.attack.hidden);
    r.ReadTrain("train", c.attack.train);
    r.Read("resamples", c.mi_resamples);
    r.RejectUnknown();
  }
  top.Read("methods", c.methods);
  top.Read("n_seeds", c.n_seeds);
  top.Read("base_seed", c.base_seed);
  top.Read("parallel", c.parallel);
  top.Read("jobs", c.jobs);
  top.Read("output_dir", c.output_dir);
  if (const json* s = top.Child("sweep")) {
    FieldReader r(*s, "sweep", errors);
    r.Read("k", c.sweep_k);
    r.Read("unlearn_ratio", c.sweep_unlearn_ratio);
    r.RejectUnknown();
  }
  top.RejectUnknown();
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

ExperimentConfig LoadConfig(const fs::path& path) {
  json j;
  try {
    j = ReadJsonFile(path);
  } catch (const FormatError& e) {
    throw ConfigError({std::string("config: ") + e.what()});
  } catch (const Error& e) {
    throw ConfigError({std::string("config: ") + e.what()});
  }
  return ConfigFromJson(j);
}

Matrix Predict(const AnyModel& model, const Matrix& x) {
  return std::visit([&](const auto& m) { return etid::Predict(m, x); }, model);
}

void SaveModel(const AnyModel& model, const fs::path& dir) {
  fs::create_directories(dir);
  if (const auto* m = std::get_if<MlpModel>(&model)) {
    SaveCheckpoint(*m, dir / "model.ckpt");
  } else {
    SaveEnsemble(std::get<Ensemble>(model), dir);
  }
}

AnyModel LoadModel(const fs::path& dir) {
  if (fs::exists(dir / "model.ckpt")) return LoadCheckpoint(dir / "model.ckpt");
  if (fs::exists(dir / "manifest.json")) return LoadEnsemble(dir);
  throw ValidationError("no model found under " + dir.string());
}

Dataset MaterializeDataset(const ExperimentConfig& config) {
  if (config.dataset.source == "csv") return LoadCsv(config.dataset.csv_path);
  return GenerateSynthetic(config.dataset.synthetic);
}

void CmdGenData(const ExperimentConfig& config, const fs::path& csv_out) {
  config.Validate();
  if (csv_out.has_parent_path()) fs::create_directories(csv_out.parent_path());
  SaveCsv(GenerateSynthetic(config.dataset.synthetic), csv_out);
}

void CmdTrain(const ExperimentConfig& config) {
  config.Validate();
  const fs::path data_dir = DataDir(config);
  fs::create_directories(data_dir);
  const Dataset full = MaterializeDataset(config);
  SaveCsv(full, data_dir / "dataset.csv");
  const Split split = SplitDataset(
      full, config.dataset.train_ratio,
      DeriveSeed(config.dataset.synthetic.seed, "split"));
  WriteJsonFile({{"train_ids", split.train.ids()},
                 {"test_ids", split.test.ids()}},
                data_dir / "split.json");
  WriteJsonFile(ToJson(config), config.OutputRoot() / "config.json");

  const ExecPolicy exec = Exec(config, config.parallel);
  for (std::uint64_t seed : config.Seeds()) {
    const TrainConfig train_cfg = Seeded(config.train, seed, "train");
    std::optional<AnyModel> roel, single;
    for (const std::string& method : config.methods) {
      AnyModel target;
      if (method == "etid" || method == "retrain_ensemble") {
        if (!roel) {
          roel = BuildRoel(split.train, config.k, config.hidden, train_cfg, exec);
        }
        target = *roel;
      } else if (method == "retrain_single" || method == "relabel") {
        if (!single) single = TrainSingle(split.train, config.hidden, train_cfg);
        target = *single;
      } else {
        target = SisaBuild(split.train, config.k, config.hidden, train_cfg, exec);
      }
      const fs::path run = RunDir(config, method, seed);
      fs::remove_all(run / "target");
      SaveModel(target, run / "target");
    }
  }
}

void CmdUnlearn(const ExperimentConfig& config,
                const std::optional<UnlearnRequest>& override_request) {
  config.Validate();
  const Workspace ws = LoadWorkspace(config);
  for (std::uint64_t seed : config.Seeds()) {
    const fs::path seed_dir = DataDir(config) / std::to_string(seed);
    fs::create_directories(seed_dir);
    const UnlearnRequest request =
        override_request ? *override_request
                         : SampleUnlearning(ws.train, config.unlearn_ratio,
                                            DeriveSeed(seed, "request"));
    for (SampleId id : request.sample_ids) {
      if (!ws.train.Has(id)) {
        throw ValidationError("requested id " + std::to_string(id) +
                              " is not a training sample");
      }
    }
    WriteJsonFile({{"sample_ids", request.sample_ids}},
                  seed_dir / "request.json");
    const Dataset remaining = Without(ws.train, request.sample_ids);
    const Dataset unlearn = ws.train.Subset(request.sample_ids);

    for (const std::string& method : config.methods) {
      const fs::path run = RunDir(config, method, seed);
      const AnyModel target = LoadModel(run / "target");
      ErasureRun serial = RunErasure(method, target, config, seed, ws.train,
                                     remaining, unlearn, request, false);
      std::optional<double> parallel_seconds;
      if (config.parallel) {
        ErasureRun par = RunErasure(method, target, config, seed, ws.train,
                                    remaining, unlearn, request, true);
        if (!SameModel(serial.unlearned, par.unlearned)) {
          throw Error(method + ": parallel run diverged from the serial run");
        }
        parallel_seconds = par.seconds;
        if (method == "etid") {
          serial.details["seconds_parallel"] = par.details["seconds_parallel"];
        }
      }
      fs::remove_all(run / "unlearned");
      SaveModel(serial.unlearned, run / "unlearned");
      json report = {{"method", method},
                     {"seed", seed},
                     {"request_size", request.sample_ids.size()},
                     {"seconds_serial", serial.seconds},
                     {"seconds_parallel", parallel_seconds
                                              ? json(*parallel_seconds)
                                              : json(nullptr)},
                     {"details", serial.details}};
      WriteJsonFile(report, run / "report.json");
    }
  }
}

std::vector<MetricsReport> CmdEvaluate(const ExperimentConfig& config) {
  config.Validate();
  const Workspace ws = LoadWorkspace(config);
  std::vector<MetricsReport> all;
  for (std::uint64_t seed : config.Seeds()) {
    const fs::path request_path =
        DataDir(config) / std::to_string(seed) / "request.json";
    if (!fs::exists(request_path)) {
      throw ValidationError("no request for seed " + std::to_string(seed) +
                            "; run `unlearn` first");
    }
    const UnlearnRequest request = LoadRequestJson(request_path);
    const Dataset remaining = Without(ws.train, request.sample_ids);
    const Dataset unlearn = ws.train.Subset(request.sample_ids);

    for (const std::string& method : config.methods) {
      const fs::path run = RunDir(config, method, seed);
      const AnyModel target = LoadModel(run / "target");
      const AnyModel unlearned = LoadModel(run / "unlearned");
      const json unlearn_report = ReadJsonFile(run / "report.json");

      MetricsReport m;
      m.method = method;
      m.seed = seed;
      m.k = config.k;
      m.unlearn_ratio = config.unlearn_ratio;
      m.n_remaining = remaining.size();
      m.n_test = ws.test.size();
      m.n_unlearn = unlearn.size();
      const Matrix p_remaining = Predict(unlearned, remaining.features());
      const Matrix p_test = Predict(unlearned, ws.test.features());
      const Matrix p_unlearn = Predict(unlearned, unlearn.features());
      m.acc_remaining = Accuracy(p_remaining, remaining.labels());
      m.acc_test = Accuracy(p_test, ws.test.labels());
      m.acc_unlearn = Accuracy(p_unlearn, unlearn.labels());
      m.target_acc_test =
          Accuracy(Predict(target, ws.test.features()), ws.test.labels());
      m.target_acc_unlearn =
          Accuracy(Predict(target, unlearn.features()), unlearn.labels());

      if (auto other = Counterpart(method); other) {
        const fs::path ref_dir = RunDir(config, *other, seed) / "unlearned";
        if (fs::exists(ref_dir)) {
          const AnyModel retrained =
              *other == method ? unlearned : LoadModel(ref_dir);
          m.con_remaining = Consistency(
              p_remaining, Predict(retrained, remaining.features()));
          m.con_test = Consistency(p_test, Predict(retrained, ws.test.features()));
          m.con_unlearn =
              Consistency(p_unlearn, Predict(retrained, unlearn.features()));
        }
      }
      m.seconds_serial = unlearn_report.at("seconds_serial").get<double>();
      if (!unlearn_report.at("seconds_parallel").is_null()) {
        m.seconds_parallel = unlearn_report.at("seconds_parallel").get<double>();
      }

      AttackConfig attack = config.attack;
      attack.train.seed = DeriveSeed(seed, "attack", config.attack.train.seed);
      const VerifiabilityResult v = Verifiability(
          target, unlearned, unlearn, remaining, ws.test, config.mi_resamples,
          attack, DeriveSeed(seed, "verifiability"));
      m.m_auc_before = v.mean_before;
      m.m_auc_after = v.mean_after;
      m.delta = v.delta;
      m.p_value = v.p_value;
      m.seeds = v.seeds;

      WriteJsonFile(ToJson(m), run / "metrics.json");
      all.push_back(std::move(m));
    }
  }
  std::ofstream csv(config.OutputRoot() / "metrics.csv", std::ios::trunc);
  csv << MetricsCsvHeader() << '\n';
  for (const auto& m : all) csv << MetricsCsvRow(m) << '\n';
  return all;
}

std::vector<MetricsReport> CmdBench(const ExperimentConfig& config) {
  CmdTrain(config);
  CmdUnlearn(config);
  return CmdEvaluate(config);
}

std::vector<SweepRow> CmdSweep(const ExperimentConfig& config) {
  config.Validate();
  const fs::path root = config.OutputRoot();
  std::vector<SweepRow> rows;
  auto run_point = [&](const std::string& axis, ExperimentConfig point,
                       const std::string& label) {
    std::vector<std::string> methods;
    for (const char* m : {"etid", "retrain_ensemble"}) {
      if (config.HasMethod(m)) methods.push_back(m);
    }
    if (methods.empty()) {
      throw ConfigError({"methods: sweeps need etid and/or retrain_ensemble"});
    }
    point.methods = methods;
    point.output_dir = (root / "sweep" / label).string();
    for (auto& m : CmdBench(point)) rows.push_back({axis, std::move(m)});
  };
  for (std::size_t k : config.sweep_k) {
    ExperimentConfig point = config;
    point.k = k;
    run_point("k", point, "k_" + std::to_string(k));
  }
  for (double ur : config.sweep_unlearn_ratio) {
    ExperimentConfig point = config;
    point.unlearn_ratio = ur;
    std::ostringstream label;
    label << "ur_" << ur;
    run_point("unlearn_ratio", point, label.str());
  }
  fs::create_directories(root);
  std::ofstream csv(root / "sweep.csv", std::ios::trunc);
  csv << "axis," << MetricsCsvHeader() << '\n';
  for (const auto& r : rows) csv << r.axis << ',' << MetricsCsvRow(r.metrics) << '\n';
  return rows;
}

std::string SummaryTable(const std::vector<MetricsReport>& reports) {
  std::map<std::string, std::vector<const MetricsReport*>> by_method;
  std::vector<std::string> order;
  for (const auto& r : reports) {
    if (!by_method.contains(r.method)) order.push_back(r.method);
    by_method[r.method].push_back(&r);
  }
  using Getter = std::function<std::optional<double>(const MetricsReport&)>;
  const std::vector<std::pair<std::string, Getter>> columns = {
      {"tgt_test", [](const MetricsReport& r) { return std::optional(r.target_acc_test); }},
      {"acc_test", [](const MetricsReport& r) { return std::optional(r.acc_test); }},
      {"acc_rem", [](const MetricsReport& r) { return std::optional(r.acc_remaining); }},
      {"acc_unl", [](const MetricsReport& r) { return std::optional(r.acc_unlearn); }},
      {"con_test", [](const MetricsReport& r) { return r.con_test; }},
      {"con_unl", [](const MetricsReport& r) { return r.con_unlearn; }},
      {"sec_ser", [](const MetricsReport& r) { return r.seconds_serial; }},
      {"sec_par", [](const MetricsReport& r) { return r.seconds_parallel; }},
      {"mauc_pre", [](const MetricsReport& r) { return std::optional(r.m_auc_before); }},
      {"mauc_post", [](const MetricsReport& r) { return std::optional(r.m_auc_after); }},
  };
  std::ostringstream out;
  out << "method          ";
  for (const auto& [name, get] : columns) {
    out << ' ' << std::string(std::max<std::size_t>(0, 10 - name.size()), ' ')
        << name;
  }
  out << '\n';
  for (const auto& method : order) {
    std::string padded = method;
    padded.resize(16, ' ');
    out << padded;
    for (const auto& [name, get] : columns) {
      std::vector<double> values;
      for (const auto* r : by_method[method]) {
        if (auto v = get(*r)) values.push_back(*v);
      }
      const std::string cell = FormatDouble(Median(values), 4);
      out << ' ' << std::string(cell.size() < 10 ? 10 - cell.size() : 0, ' ')
          << cell;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace etid
