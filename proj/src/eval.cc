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

#include "etid/eval.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "etid/random.h"
#include "etid/serialization.h"

namespace etid {
namespace {

std::size_t ArgMax(std::span<const double> row) {
  return static_cast<std::size_t>(
      std::max_element(row.begin(), row.end()) - row.begin());
}

std::vector<double> MemberScores(const MlpModel& attack, const Matrix& post) {
  const Matrix p = Forward(attack, post);
  std::vector<double> scores(p.rows());
  for (std::size_t r = 0; r < p.rows(); ++r) scores[r] = p(r, 1);
  return scores;
}

nlohmann::json Optional(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

std::optional<double> OptionalFrom(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::optional<double> PerSample(const std::optional<double>& sum,
                                std::size_t n) {
  if (!sum || n == 0) return std::nullopt;
  return *sum / static_cast<double>(n);
}

std::string Cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), *v);
  return std::string(buf, res.ptr);
}

std::string Cell(double v) { return Cell(std::optional<double>(v)); }

}  // namespace

double Accuracy(const Matrix& posteriors, std::span<const int> labels) {
  if (posteriors.rows() == 0) throw ValidationError("accuracy of an empty set");
  if (posteriors.rows() != labels.size()) {
    throw ShapeError("posterior rows and labels differ in length");
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (static_cast<int>(ArgMax(posteriors.row(r))) == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double Consistency(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("consistency operands differ in shape");
  }
  if (a.rows() == 0) throw ValidationError("consistency of an empty set");
  double total = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double sq = 0.0;
    auto ra = a.row(r);
    auto rb = b.row(r);
    for (std::size_t c = 0; c < ra.size(); ++c) {
      const double d = ra[c] - rb[c];
      sq += d * d;
    }
    total += std::sqrt(sq);
  }
  return total;
}

double RankAuc(std::span<const double> positives,
               std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) {
    throw ValidationError("AUC needs at least one positive and one negative");
  }
  struct Scored {
    double score;
    bool positive;
  };
  std::vector<Scored> all;
  all.reserve(positives.size() + negatives.size());
  for (double s : positives) all.push_back({s, true});
  for (double s : negatives) all.push_back({s, false});
  std::sort(all.begin(), all.end(),
            [](const Scored& a, const Scored& b) { return a.score < b.score; });
  // Sum of 1-based mid-ranks of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (all[t].positive) rank_sum += mid_rank;
    }
    i = j;
  }
  const auto n_pos = static_cast<double>(positives.size());
  const auto n_neg = static_cast<double>(negatives.size());
  const double u = rank_sum - n_pos * (n_pos + 1.0) / 2.0;
  return u / (n_pos * n_neg);
}

AttackSet BuildMiDataset(const Matrix& member_posteriors,
                         const Matrix& non_member_posteriors) {
  if (member_posteriors.rows() != non_member_posteriors.rows()) {
    throw ValidationError("member and non-member sets differ in size");
  }
  if (member_posteriors.cols() != non_member_posteriors.cols()) {
    throw ShapeError("posterior widths differ");
  }
  const std::size_t n = member_posteriors.rows();
  AttackSet set;
  set.features = Matrix(2 * n, member_posteriors.cols());
  auto& data = set.features.data();
  std::copy(member_posteriors.data().begin(), member_posteriors.data().end(),
            data.begin());
  std::copy(non_member_posteriors.data().begin(),
            non_member_posteriors.data().end(),
            data.begin() + static_cast<std::ptrdiff_t>(n * member_posteriors.cols()));
  set.labels.assign(2 * n, 0);
  std::fill(set.labels.begin(), set.labels.begin() + static_cast<std::ptrdiff_t>(n), 1);
  return set;
}

MlpModel TrainAttack(const AttackSet& set, const AttackConfig& config) {
  if (set.features.rows() == 0) throw ValidationError("empty attack set");
  MlpModel init = MlpModel::Initialized(
      {set.features.cols(), config.hidden, 2},
      DeriveSeed(config.train.seed, "attack-init"));
  TrainConfig cfg = config.train;
  cfg.loss = LossKind::kCrossEntropy;
  cfg.seed = DeriveSeed(config.train.seed, "attack-train");
  return Train(std::move(init), set.features, Targets(set.labels), cfg);
}

double MAuc(const MlpModel& attack, const Matrix& unlearn_posteriors,
            const Matrix& held_out_posteriors) {
  if (unlearn_posteriors.rows() == 0 || held_out_posteriors.rows() == 0) {
    throw ValidationError("M-AUC needs non-empty member and held-out sets");
  }
  const auto pos = MemberScores(attack, unlearn_posteriors);
  const auto neg = MemberScores(attack, held_out_posteriors);
  return RankAuc(pos, neg);
}

TTestResult PairedTTest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("paired samples differ in size");
  const std::size_t n = a.size();
  if (n < 2) throw ValidationError("a paired t-test needs at least two pairs");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean =
      std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  TTestResult result;
  if (sd == 0.0) {
    // Degenerate: identical differences. Zero mean is no evidence at all.
    if (mean == 0.0) return {0.0, 1.0};
    return {std::copysign(std::numeric_limits<double>::infinity(), mean), 0.0};
  }
  result.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  boost::math::students_t dist(static_cast<double>(n - 1));
  result.p_value = 2.0 * boost::math::cdf(boost::math::complement(
                             dist, std::abs(result.t)));
  result.p_value = std::clamp(result.p_value, 0.0, 1.0);
  return result;
}

VerifiabilityResult Verifiability(const VerifiabilityInputs& in,
                                  std::size_t n_seeds,
                                  const AttackConfig& config,
                                  std::uint64_t seed) {
  if (n_seeds < 2) {
    throw ValidationError("verifiability needs at least two resamples");
  }
  const std::size_t n_unlearn = in.target_unlearn.rows();
  const std::size_t n_test = in.target_test.rows();
  if (n_unlearn == 0) throw ValidationError("no unlearning samples");
  if (n_test <= n_unlearn) {
    throw ValidationError("test pool must be larger than the unlearning set");
  }
  if (in.unlearned_unlearn.rows() != n_unlearn ||
      in.unlearned_test.rows() != n_test) {
    throw ShapeError("verifiability posterior blocks disagree in size");
  }
  const std::size_t n_attack =
      std::min(n_test - n_unlearn, in.target_members.rows());
  if (n_attack == 0) throw ValidationError("member pool is empty");

  VerifiabilityResult result;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const std::uint64_t resample_seed = DeriveSeed(seed, "mi-resample", s);
    result.seeds.push_back(resample_seed);
    Rng rng(resample_seed);

    std::vector<std::size_t> test_rows(n_test);
    std::iota(test_rows.begin(), test_rows.end(), 0);
    rng.Shuffle(test_rows);
    const std::vector<std::size_t> held_out(test_rows.begin(),
                                            test_rows.begin() + n_unlearn);
    const std::vector<std::size_t> non_members(
        test_rows.begin() + n_unlearn, test_rows.begin() + n_unlearn + n_attack);

    std::vector<std::size_t> member_rows(in.target_members.rows());
    std::iota(member_rows.begin(), member_rows.end(), 0);
    rng.Shuffle(member_rows);
    member_rows.resize(n_attack);

    const AttackSet set =
        BuildMiDataset(in.target_members.SelectRows(member_rows),
                       in.target_test.SelectRows(non_members));
    AttackConfig cfg = config;
    cfg.train.seed = DeriveSeed(config.train.seed, "mi-attack", s);
    const MlpModel attack = TrainAttack(set, cfg);

    result.auc_before.push_back(
        MAuc(attack, in.target_unlearn, in.target_test.SelectRows(held_out)));
    result.auc_after.push_back(MAuc(attack, in.unlearned_unlearn,
                                    in.unlearned_test.SelectRows(held_out)));
  }
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) /
           static_cast<double>(v.size());
  };
  result.mean_before = mean(result.auc_before);
  result.mean_after = mean(result.auc_after);
  result.delta = std::abs(result.mean_before - result.mean_after);
  result.p_value = PairedTTest(result.auc_before, result.auc_after).p_value;
  return result;
}

nlohmann::json ToJson(const MetricsReport& r) {
  return {{"method", r.method},
          {"seed", r.seed},
          {"k", r.k},
          {"unlearn_ratio", r.unlearn_ratio},
          {"acc_remaining", r.acc_remaining},
          {"acc_test", r.acc_test},
          {"acc_unlearn", r.acc_unlearn},
          {"target_acc_test", r.target_acc_test},
          {"target_acc_unlearn", r.target_acc_unlearn},
          {"con_remaining", Optional(r.con_remaining)},
          {"con_test", Optional(r.con_test)},
          {"con_unlearn", Optional(r.con_unlearn)},
          {"con_remaining_mean", Optional(PerSample(r.con_remaining, r.n_remaining))},
          {"con_test_mean", Optional(PerSample(r.con_test, r.n_test))},
          {"con_unlearn_mean", Optional(PerSample(r.con_unlearn, r.n_unlearn))},
          {"n_remaining", r.n_remaining},
          {"n_test", r.n_test},
          {"n_unlearn", r.n_unlearn},
          {"seconds_serial", Optional(r.seconds_serial)},
          {"seconds_parallel", Optional(r.seconds_parallel)},
          {"m_auc_before", r.m_auc_before},
          {"m_auc_after", r.m_auc_after},
          {"delta", r.delta},
          {"p_value", r.p_value},
          {"seeds", r.seeds}};
}

MetricsReport MetricsFromJson(const nlohmann::json& j) {
  MetricsReport r;
  try {
    r.method = j.at("method").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.k = j.at("k").get<std::size_t>();
    r.unlearn_ratio = j.at("unlearn_ratio").get<double>();
    r.acc_remaining = j.at("acc_remaining").get<double>();
    r.acc_test = j.at("acc_test").get<double>();
    r.acc_unlearn = j.at("acc_unlearn").get<double>();
    r.target_acc_test = j.at("target_acc_test").get<double>();
    r.target_acc_unlearn = j.at("target_acc_unlearn").get<double>();
    r.con_remaining = OptionalFrom(j, "con_remaining");
    r.con_test = OptionalFrom(j, "con_test");
    r.con_unlearn = OptionalFrom(j, "con_unlearn");
    r.n_remaining = j.at("n_remaining").get<std::size_t>();
    r.n_test = j.at("n_test").get<std::size_t>();
    r.n_unlearn = j.at("n_unlearn").get<std::size_t>();
    r.seconds_serial = OptionalFrom(j, "seconds_serial");
    r.seconds_parallel = OptionalFrom(j, "seconds_parallel");
    r.m_auc_before = j.at("m_auc_before").get<double>();
    r.m_auc_after = j.at("m_auc_after").get<double>();
    r.delta = j.at("delta").get<double>();
    r.p_value = j.at("p_value").get<double>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("metrics report: ") + e.what());
  }
  return r;
}

std::string MetricsCsvHeader() {
  return "method,k,unlearn_ratio,seed,acc_remaining,acc_test,acc_unlearn,"
         "target_acc_test,target_acc_unlearn,"
         "con_remaining,con_test,con_unlearn,seconds_serial,seconds_parallel,"
         "m_auc_before,m_auc_after,delta,p_value";
}

std::string MetricsCsvRow(const MetricsReport& r) {
  std::ostringstream s;
  s << r.method << ',' << r.k << ',' << Cell(r.unlearn_ratio) << ',' << r.seed
    << ',' << Cell(r.acc_remaining) << ',' << Cell(r.acc_test) << ','
    << Cell(r.acc_unlearn) << ',' << Cell(r.target_acc_test) << ','
    << Cell(r.target_acc_unlearn) << ',' << Cell(r.con_remaining) << ','
    << Cell(r.con_test) << ',' << Cell(r.con_unlearn) << ','
    << Cell(r.seconds_serial) << ',' << Cell(r.seconds_parallel) << ','
    << Cell(r.m_auc_before) << ',' << Cell(r.m_auc_after) << ','
    << Cell(r.delta) << ',' << Cell(r.p_value);
  return s.str();
}

}  // namespace etid
