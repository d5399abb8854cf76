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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace etid {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path Scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("etid_exp_" + name);
  fs::remove_all(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Small but complete: 240 training rows split evenly for K=3.
ExperimentConfig Tiny(const fs::path& out) {
  ExperimentConfig c;
  c.dataset.synthetic = {.n = 300, .features = 5, .classes = 3,
                         .cluster_spread = 2.0, .seed = 4};
  c.dataset.train_ratio = 0.8;
  c.k = 3;
  c.unlearn_ratio = 0.05;
  c.hidden = {8};
  c.train.epochs = 3;
  c.distill.epochs = 5;
  c.relabel.epochs = 2;
  c.attack.train.epochs = 3;
  c.mi_resamples = 2;
  c.n_seeds = 2;
  c.jobs = 3;
  c.output_dir = out.string();
  return c;
}

bool HasField(const ConfigError& e, const std::string& prefix) {
  return std::any_of(e.fields().begin(), e.fields().end(),
                     [&](const std::string& f) { return f.rfind(prefix, 0) == 0; });
}

ConfigError ParseError(const json& j) {
  try {
    ConfigFromJson(j);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError for " << j.dump();
  return ConfigError({});
}

TEST(ConfigTest, DefaultsMirrorProtocol) {
  const ExperimentConfig c;
  EXPECT_EQ(c.k, 5u);
  EXPECT_EQ(c.unlearn_ratio, 0.01);
  EXPECT_EQ(c.n_seeds, 5u);
  EXPECT_EQ(c.mi_resamples, 5u);
  EXPECT_EQ(c.Seeds(), (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
  EXPECT_EQ(c.sweep_k, (std::vector<std::size_t>{3, 5, 7, 10}));
  EXPECT_EQ(c.dataset.synthetic.n, 5000u);
  EXPECT_EQ(c.dataset.synthetic.features, 20u);
  EXPECT_EQ(c.dataset.synthetic.classes, 5);
  EXPECT_EQ(c.distill.loss, LossKind::kKlToTargets);
  EXPECT_NO_THROW(c.Validate());
  const auto train_rows = static_cast<std::size_t>(
      std::llround(c.dataset.train_ratio * c.dataset.synthetic.n));
  for (std::size_t k : c.sweep_k) EXPECT_EQ(train_rows % k, 0u) << k;
}

TEST(ConfigTest, JsonRoundTrip) {
  ExperimentConfig c;
  c.k = 7;
  c.methods = {"etid", "sisa"};
  c.sweep_unlearn_ratio = {0.02};
  const json j = ToJson(c);
  EXPECT_EQ(ToJson(ConfigFromJson(j)), j);
  EXPECT_EQ(ToJson(ConfigFromJson(json::object())), ToJson(ExperimentConfig()));
}

TEST(ConfigTest, UnknownKeysAreRejected) {
  const ConfigError e =
      ParseError({{"kk", 3}, {"dataset", {{"spread", 1.0}}}});
  EXPECT_TRUE(HasField(e, "kk: unknown key"));
  EXPECT_TRUE(HasField(e, "dataset.spread: unknown key"));
  EXPECT_TRUE(HasField(ParseError({{"attack", {{"layers", 2}}}}),
                       "attack.layers: unknown key"));
}

TEST(ConfigTest, TypeErrorsNameTheField) {
  EXPECT_TRUE(HasField(ParseError({{"k", "five"}}), "k: "));
  EXPECT_TRUE(HasField(ParseError({{"train", {{"epochs", -1.5}}}}), "train"));
  EXPECT_TRUE(HasField(ParseError({{"dataset", {{"n", "many"}}}}), "dataset.n: "));
  EXPECT_TRUE(HasField(ParseError({{"k", -3}}), "k: "));
  EXPECT_TRUE(HasField(ParseError({{"hidden", {16, 2.5}}}), "hidden: "));
}

TEST(ConfigTest, ValidationListsEveryBadField) {
  ExperimentConfig c;
  c.k = 2;
  c.unlearn_ratio = 1.5;
  c.methods = {"etid", "scrub"};
  c.mi_resamples = 1;
  c.distill.loss = LossKind::kCrossEntropy;
  try {
    c.Validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_TRUE(HasField(e, "k: must be >= 3"));
    EXPECT_TRUE(HasField(e, "unlearn_ratio"));
    EXPECT_TRUE(HasField(e, "methods: unknown method 'scrub'"));
    EXPECT_TRUE(HasField(e, "attack.resamples"));
    EXPECT_TRUE(HasField(e, "distill.loss"));
  }
  c = ExperimentConfig();
  c.methods = {"sisa"};
  c.k = 2;
  EXPECT_NO_THROW(c.Validate());
  c.dataset.source = "csv";
  c.dataset.csv_path = "/nonexistent/data.csv";
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(ConfigTest, MissingFileIsConfigError) {
  EXPECT_THROW(LoadConfig("/nonexistent/config.json"), ConfigError);
}

TEST(ConfigTest, OutputRootFromEnvironment) {
  ExperimentConfig c;
  ::unsetenv(kOutputRootEnv);
  EXPECT_EQ(c.OutputRoot(), fs::path("etid-out"));
  ::setenv(kOutputRootEnv, "/tmp/somewhere", 1);
  EXPECT_EQ(c.OutputRoot(), fs::path("/tmp/somewhere"));
  c.output_dir = "/tmp/explicit";
  EXPECT_EQ(c.OutputRoot(), fs::path("/tmp/explicit"));
  ::unsetenv(kOutputRootEnv);
}

// Drops every key that starts with "seconds", at any depth.
void StripTiming(json& j) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end();) {
      if (it.key().rfind("seconds", 0) == 0) {
        it = j.erase(it);
      } else {
        StripTiming(*it);
        ++it;
      }
    }
  } else if (j.is_array()) {
    for (auto& v : j) StripTiming(v);
  }
}

std::string StripCsvTiming(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  std::vector<bool> keep;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (keep.empty()) {
      for (const auto& c : cells) keep.push_back(c.rfind("seconds", 0) != 0);
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (keep[i]) out += cells[i] + ',';
    }
    out += '\n';
  }
  return out;
}

// Every output file under `root`, keyed by relative path, timing removed.
std::map<std::string, std::string> Snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    const std::string rel = fs::relative(p, root).string();
    if (p.filename() == "config.json") continue;  // holds output_dir
    std::string body = Slurp(p);
    if (p.extension() == ".json") {
      json j = json::parse(body);
      StripTiming(j);
      body = j.dump();
    } else if (p.extension() == ".csv" && p.filename() != "dataset.csv") {
      body = StripCsvTiming(body);
    }
    files[rel] = body;
  }
  return files;
}

TEST(PipelineTest, TrainUnlearnEvaluateCompose) {
  const fs::path out = Scratch("pipeline");
  const ExperimentConfig c = Tiny(out);
  CmdTrain(c);
  for (const char* m : {"etid", "retrain_single", "retrain_ensemble", "sisa",
                        "relabel"}) {
    EXPECT_TRUE(fs::exists(out / m / "1" / "target")) << m;
  }
  const std::string etid_ckpt =
      Slurp(out / "etid" / "2" / "target" / "manifest.json");
  CmdUnlearn(c);
  EXPECT_TRUE(fs::exists(out / "data" / "1" / "request.json"));
  const std::vector<MetricsReport> reports = CmdEvaluate(c);
  ASSERT_EQ(reports.size(), 10u);
  EXPECT_EQ(Slurp(out / "etid" / "2" / "target" / "manifest.json"), etid_ckpt);

  for (const auto& r : reports) {
    EXPECT_EQ(r.n_unlearn, 12u);
    EXPECT_EQ(r.n_remaining, 228u);
    EXPECT_EQ(r.n_test, 60u);
    EXPECT_NEAR(r.delta, std::abs(r.m_auc_before - r.m_auc_after), 1e-12);
    EXPECT_TRUE(r.seconds_serial.has_value());
    if (r.method == "retrain_single" || r.method == "retrain_ensemble") {
      EXPECT_EQ(r.con_test, 0.0);
    }
    if (r.method == "etid") {
      EXPECT_TRUE(r.seconds_parallel.has_value());
      EXPECT_GT(*r.con_test, 0.0);
    }
    const MetricsReport back = MetricsFromJson(
        json::parse(Slurp(out / r.method / std::to_string(r.seed) /
                          "metrics.json")));
    EXPECT_EQ(ToJson(back), ToJson(r));
  }
  std::ifstream csv(out / "metrics.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 11);
  EXPECT_FALSE(SummaryTable(reports).empty());
  fs::remove_all(out);
}

TEST(PipelineTest, EvaluateBeforeUnlearnFails) {
  const fs::path out = Scratch("order");
  ExperimentConfig c = Tiny(out);
  c.methods = {"sisa"};
  c.n_seeds = 1;
  CmdTrain(c);
  EXPECT_THROW(CmdEvaluate(c), ValidationError);
  fs::remove_all(out);
}

TEST(PipelineTest, RepeatedRunsAreIdenticalSerialAndParallel) {
  const fs::path a = Scratch("det_a"), b = Scratch("det_b"),
                 s = Scratch("det_serial");
  ExperimentConfig c = Tiny(a);
  c.n_seeds = 1;
  CmdBench(c);
  c.output_dir = b.string();
  CmdBench(c);
  c.output_dir = s.string();
  c.parallel = false;
  CmdBench(c);
  const auto sa = Snapshot(a), sb = Snapshot(b), ss = Snapshot(s);
  EXPECT_EQ(sa, sb);
  // The serial run never records a parallel timing, and that is all.
  EXPECT_EQ(sa, ss);
  EXPECT_GT(sa.size(), 20u);
  for (const auto& p : {a, b, s}) fs::remove_all(p);
}

TEST(SweepTest, GridArithmetic) {
  const fs::path out = Scratch("sweep");
  ExperimentConfig c = Tiny(out);
  c.dataset.synthetic.n = 525;  // 420 training rows
  c.methods = {"etid", "retrain_ensemble", "sisa"};
  c.n_seeds = 5;
  c.distill.epochs = 2;
  c.train.epochs = 2;
  c.unlearn_ratio = 0.02;
  c.sweep_unlearn_ratio = {0.01, 0.05};
  const std::vector<SweepRow> rows = CmdSweep(c);
  std::map<std::pair<std::string, std::string>, int> counts;
  for (const auto& r : rows) ++counts[{r.axis, r.metrics.method}];
  EXPECT_EQ((counts[{"k", "etid"}]), 20);
  EXPECT_EQ((counts[{"k", "retrain_ensemble"}]), 20);
  EXPECT_EQ((counts[{"unlearn_ratio", "etid"}]), 10);
  EXPECT_EQ((counts[{"k", "sisa"}]), 0);
  std::ifstream csv(out / "sweep.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "axis," + MetricsCsvHeader());
  fs::remove_all(out);
}

// --- command-line tool ---

struct CliResult {
  int code = -1;
  std::string out, err;
};

CliResult RunCli(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = std::string(ETID_CLI_PATH) + " " + args + " >" +
                          out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = Slurp(out);
  r.err = Slurp(err);
  return r;
}

void WriteJson(const json& j, const fs::path& p) { std::ofstream(p) << j.dump(); }

TEST(CliTest, InvalidConfigExitsTwoWithRecord) {
  const fs::path dir = Scratch("cli_config");
  fs::create_directories(dir);
  WriteJson({{"k", 2}, {"bogus", true}}, dir / "bad.json");
  const CliResult r = RunCli("train -c " + (dir / "bad.json").string(), dir);
  EXPECT_EQ(r.code, 2);
  const json rec = json::parse(r.err);
  EXPECT_EQ(rec["error"], "config");
  EXPECT_EQ(rec["exit_code"], 2);
  ASSERT_TRUE(rec["fields"].is_array());
  EXPECT_EQ(rec["fields"][0], "bogus: unknown key");

  const CliResult flag = RunCli("train --k 2 -o " + (dir / "o").string(), dir);
  EXPECT_EQ(flag.code, 2);
  EXPECT_NE(json::parse(flag.err)["fields"].dump().find("k: must be >= 3"),
            std::string::npos);

  EXPECT_EQ(RunCli("frobnicate", dir).code, 2);
  EXPECT_EQ(json::parse(RunCli("frobnicate", dir).err)["error"], "usage");
  EXPECT_EQ(RunCli("train --parallel --serial", dir).code, 2);
  fs::remove_all(dir);
}

TEST(CliTest, GenDataWritesDefaultDataset) {
  const fs::path dir = Scratch("cli_gen");
  fs::create_directories(dir);
  const fs::path csv = dir / "d.csv";
  const CliResult r = RunCli("gen-data --out " + csv.string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(csv);
  std::string line;
  int rows = -1;  // header
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 5000);
  fs::remove_all(dir);
}

TEST(CliTest, ExpiredReferenceExitsThree) {
  // 100 training rows over K=3 parts of 34/33/33: a request in a small
  // part has a reference whose shared data is one row short.
  const fs::path dir = Scratch("cli_expired");
  fs::create_directories(dir);
  ExperimentConfig c = Tiny(dir / "out");
  c.dataset.synthetic.n = 125;
  c.methods = {"etid"};
  c.n_seeds = 1;
  json cfg = ToJson(c);
  cfg.erase("output_dir");
  WriteJson(cfg, dir / "c.json");
  const std::string base =
      " -c " + (dir / "c.json").string() + " ";
  ::setenv(kOutputRootEnv, (dir / "out").string().c_str(), 1);
  ASSERT_EQ(RunCli("train" + base, dir).code, 0);
  ::unsetenv(kOutputRootEnv);
  const json manifest = json::parse(
      Slurp(dir / "out" / "etid" / "1" / "target" / "manifest.json"));
  SampleId victim = 0;
  for (const auto& part : manifest["partition"]) {
    if (part.size() == 33) victim = part[0].get<SampleId>();
  }
  std::ofstream(dir / "req.txt") << victim << '\n';
  const CliResult r = RunCli("unlearn" + base + "-o " +
                                 (dir / "out").string() + " --request " +
                                 (dir / "req.txt").string(),
                             dir);
  EXPECT_EQ(r.code, 3) << r.err;
  const json rec = json::parse(r.err);
  EXPECT_EQ(rec["error"], "validity_expired");
  EXPECT_EQ(rec["exit_code"], 3);
  EXPECT_FALSE(fs::exists(dir / "out" / "etid" / "1" / "unlearned"));
  fs::remove_all(dir);
}

TEST(CliTest, BenchPrintsSummary) {
  const fs::path dir = Scratch("cli_bench");
  fs::create_directories(dir);
  ExperimentConfig c = Tiny(dir / "out");
  c.methods = {"etid", "retrain_ensemble"};
  c.n_seeds = 1;
  WriteJson(ToJson(c), dir / "c.json");
  const CliResult r =
      RunCli("bench --serial -c " + (dir / "c.json").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("retrain_ensemble"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "out" / "metrics.csv"));
  fs::remove_all(dir);
}

}  // namespace
}  // namespace etid
