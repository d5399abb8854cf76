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

// Unlearning quality metrics: accuracy, consistency with a retrained model,
// timing, and membership-inference verifiability (attack M-AUC before and
// after erasure plus a paired significance test over resamples).

#ifndef ETID_EVAL_H_
#define ETID_EVAL_H_

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etid/dataset.h"
#include "etid/matrix.h"
#include "etid/nn.h"
#include "etid/timing.h"
#include "json.hpp"

namespace etid {

// Anything with a Predict(model, x) -> posterior matrix overload: MlpModel
// and Ensemble both qualify, so single models and ensembles share one
// metric path.
template <typename M>
concept Classifier = requires(const M& m, const Matrix& x) {
  { Predict(m, x) } -> std::same_as<Matrix>;
};

// Fraction of rows whose argmax matches the label.
double Accuracy(const Matrix& posteriors, std::span<const int> labels);

template <Classifier M>
double Accuracy(const M& model, const Matrix& x, std::span<const int> labels) {
  if (x.rows() == 0) throw ValidationError("accuracy of an empty set");
  return Accuracy(Predict(model, x), labels);
}

// Sum over rows of the L2 distance between posterior rows.
double Consistency(const Matrix& a, const Matrix& b);

template <Classifier A, Classifier B>
double Consistency(const A& unlearned, const B& retrained, const Matrix& x) {
  if (x.rows() == 0) throw ValidationError("consistency of an empty set");
  return Consistency(Predict(unlearned, x), Predict(retrained, x));
}

// Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(equal).
double RankAuc(std::span<const double> positives,
               std::span<const double> negatives);

struct AttackSet {
  Matrix features;  // target-model posteriors
  std::vector<int> labels;  // 1 member, 0 non-member
};

// Members first, then non-members.
AttackSet BuildMiDataset(const Matrix& member_posteriors,
                         const Matrix& non_member_posteriors);

// Checks |members| == |non_members| and members ∩ unlearn = ∅ before
// querying the target.
template <Classifier M>
AttackSet BuildMiDataset(const M& target, const Dataset& members,
                         const Dataset& non_members, const IdSet& unlearn) {
  if (members.size() != non_members.size()) {
    throw ValidationError("member and non-member sets differ in size");
  }
  for (SampleId id : members.ids()) {
    if (Contains(unlearn, id)) {
      throw ValidationError("attack member set overlaps the unlearning data");
    }
  }
  return BuildMiDataset(Predict(target, members.features()),
                        Predict(target, non_members.features()));
}

struct AttackConfig {
  std::size_t hidden = 32;
  TrainConfig train{.learning_rate = 0.1,
                    .epochs = 60,
                    .batch_size = 32,
                    .seed = 0,
                    .shuffle = true,
                    .loss = LossKind::kCrossEntropy,
                    .stop_below = 0.0};
};

// Two dense layers: classes -> hidden -> {non-member, member}.
MlpModel TrainAttack(const AttackSet& set, const AttackConfig& config);

// AUC of the attack's member probability, unlearning rows as positives.
double MAuc(const MlpModel& attack, const Matrix& unlearn_posteriors,
            const Matrix& held_out_posteriors);

template <Classifier M>
double MAuc(const MlpModel& attack, const M& model, const Matrix& x_unlearn,
            const Matrix& x_held_out) {
  if (x_unlearn.rows() == 0 || x_held_out.rows() == 0) {
    throw ValidationError("M-AUC needs non-empty member and held-out sets");
  }
  if (x_unlearn.rows() != x_held_out.rows()) {
    throw ValidationError("M-AUC sets must be the same size");
  }
  return MAuc(attack, Predict(model, x_unlearn), Predict(model, x_held_out));
}

struct TTestResult {
  double t = 0.0;
  double p_value = 1.0;
};

// Two-sided paired t-test on (a_i - b_i).
TTestResult PairedTTest(std::span<const double> a, std::span<const double> b);

// Posteriors the verifiability protocol needs. Rows of *_members index
// `member_pool`, rows of *_test index `test_pool`.
struct VerifiabilityInputs {
  Matrix target_unlearn;
  Matrix target_members;
  Matrix target_test;
  Matrix unlearned_unlearn;
  Matrix unlearned_test;
};

struct VerifiabilityResult {
  std::vector<double> auc_before;
  std::vector<double> auc_after;
  std::vector<std::uint64_t> seeds;
  double mean_before = 0.0;
  double mean_after = 0.0;
  double delta = 0.0;
  double p_value = 1.0;
};

// Per resample: draw |D^u| held-out rows from the test pool, use the rest of
// the pool as non-members and an equal number of member-pool rows as
// members, train the attack on target posteriors, and score both models.
VerifiabilityResult Verifiability(const VerifiabilityInputs& inputs,
                                  std::size_t n_seeds,
                                  const AttackConfig& config,
                                  std::uint64_t seed);

// member_pool must exclude the unlearning samples.
template <Classifier T, Classifier U>
VerifiabilityResult Verifiability(const T& target, const U& unlearned,
                                  const Dataset& unlearn,
                                  const Dataset& member_pool,
                                  const Dataset& test_pool,
                                  std::size_t n_seeds,
                                  const AttackConfig& config,
                                  std::uint64_t seed) {
  const IdSet unlearn_ids = unlearn.IdSetOf();
  for (SampleId id : member_pool.ids()) {
    if (Contains(unlearn_ids, id)) {
      throw ValidationError("member pool overlaps the unlearning data");
    }
  }
  VerifiabilityInputs in{Predict(target, unlearn.features()),
                         Predict(target, member_pool.features()),
                         Predict(target, test_pool.features()),
                         Predict(unlearned, unlearn.features()),
                         Predict(unlearned, test_pool.features())};
  return Verifiability(in, n_seeds, config, seed);
}

struct MetricsReport {
  std::string method;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  double unlearn_ratio = 0.0;
  double acc_remaining = 0.0;
  double acc_test = 0.0;
  double acc_unlearn = 0.0;
  // The model before erasure.
  double target_acc_test = 0.0;
  double target_acc_unlearn = 0.0;
  // Against the method's retrained counterpart, when one exists.
  std::optional<double> con_remaining;
  std::optional<double> con_test;
  std::optional<double> con_unlearn;
  std::optional<double> seconds_serial;
  std::optional<double> seconds_parallel;
  double m_auc_before = 0.0;
  double m_auc_after = 0.0;
  double delta = 0.0;
  double p_value = 1.0;
  std::vector<std::uint64_t> seeds;
  // Row counts behind the summed consistency values, for per-sample means.
  std::size_t n_remaining = 0;
  std::size_t n_test = 0;
  std::size_t n_unlearn = 0;
};

nlohmann::json ToJson(const MetricsReport& report);
MetricsReport MetricsFromJson(const nlohmann::json& j);

std::string MetricsCsvHeader();
std::string MetricsCsvRow(const MetricsReport& report);

}  // namespace etid

#endif  // ETID_EVAL_H_
