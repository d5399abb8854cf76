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

#include "etid/baselines.h"

#include <gtest/gtest.h>

#include "etid/eval.h"
#include "etid/random.h"
#include "etid/tid.h"
#include "etid/timing.h"

namespace etid {
namespace {

const TrainConfig kTrain{.learning_rate = 0.1, .epochs = 3, .batch_size = 16,
                         .seed = 11};

Dataset Data(std::size_t n, double spread = 1.5, std::uint64_t seed = 3) {
  return GenerateSynthetic({.n = n, .features = 4, .classes = 3,
                            .cluster_spread = spread, .seed = seed});
}

Dataset Without(const Dataset& d, const IdSet& drop) {
  std::vector<SampleId> keep;
  for (SampleId id : d.ids()) {
    if (!Contains(drop, id)) keep.push_back(id);
  }
  return d.Subset(MakeIdSet(keep));
}

TEST(BaselineKindTest, NamesRoundTrip) {
  for (BaselineKind k :
       {BaselineKind::kRetrainSingle, BaselineKind::kRetrainEnsemble,
        BaselineKind::kSisa, BaselineKind::kRelabel}) {
    EXPECT_EQ(ParseBaseline(BaselineName(k)), k);
  }
  EXPECT_THROW(ParseBaseline("fisher"), ValidationError);
}

TEST(RetrainTest, EmptyErasureReproducesOriginal) {
  const Dataset d = Data(90);
  const MlpModel a = TrainSingle(d, {6}, kTrain);
  const MlpModel b = RetrainSingle(Without(d, {}), {6}, kTrain);
  EXPECT_EQ(a, b);
  const Ensemble ea = BuildRoel(d, 3, {4}, kTrain);
  const Ensemble eb = RetrainEnsemble(Without(d, {}), 3, {4}, kTrain);
  EXPECT_EQ(ea.sub_models, eb.sub_models);
}

TEST(RetrainTest, AuditExcludesErasedIds) {
  const Dataset d = Data(120);
  const UnlearnRequest req = SampleUnlearning(d, 0.1, 5);
  const Dataset remaining = Without(d, req.sample_ids);
  IdSet seen;
  RetrainSingle(remaining, {5}, kTrain, &seen);
  EXPECT_EQ(IntersectionSize(seen, req.sample_ids), 0u);
  EXPECT_EQ(seen, remaining.IdSetOf());
  TrainingAudit audit;
  RetrainEnsemble(remaining, 4, {5}, kTrain, {}, &audit);
  for (const IdSet& s : audit.seen) {
    EXPECT_EQ(IntersectionSize(s, req.sample_ids), 0u);
  }
}

TEST(RetrainTest, EmptyRemainingIsRejected) {
  const Dataset d = Data(30);
  const IdSet no_ids;
  const Dataset none = d.Subset(no_ids);
  EXPECT_THROW(RetrainSingle(none, {3}, kTrain), ValidationError);
  EXPECT_THROW(RetrainEnsemble(none, 3, {3}, kTrain), ValidationError);
}

TEST(SisaTest, ShardsAreDisjointCoverAndSmall) {
  const Dataset d = Data(100);
  TrainingAudit audit;
  const Ensemble s = SisaBuild(d, 4, {4}, kTrain, {}, &audit);
  const Ensemble r = BuildRoel(d, 4, {4}, kTrain);
  IdSet all;
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(s.TrainingIds(i).size(), 25u);
    EXPECT_EQ(r.TrainingIds(i).size(), 75u);
    EXPECT_EQ(audit.seen[i], s.partition.part(i));
    EXPECT_EQ(IntersectionSize(all, s.partition.part(i)), 0u);
    all = Union(all, s.partition.part(i));
  }
  EXPECT_EQ(all, d.IdSetOf());
  EXPECT_NO_THROW(SisaBuild(d, 2, {4}, kTrain));
}

TEST(SisaTest, RequestInsideOneShardRetrainsOne) {
  const Dataset d = Data(100);
  Ensemble s = SisaBuild(d, 5, {4}, kTrain);
  const Ensemble before = s;
  const IdSet req(s.partition.part(2).begin(), s.partition.part(2).begin() + 3);
  TrainingAudit audit;
  const SisaOutcome out = SisaUnlearn(s, d, {req}, {}, &audit);
  ASSERT_EQ(out.retrained_slots, std::vector<std::size_t>{2});
  for (std::size_t i = 0; i < 5; ++i) {
    if (i == 2) continue;
    EXPECT_EQ(s.sub_models[i], before.sub_models[i]);
  }
  EXPECT_NE(s.sub_models[2], before.sub_models[2]);
  EXPECT_EQ(IntersectionSize(audit.seen[2], req), 0u);
  EXPECT_EQ(audit.seen[2].size(), 17u);
  EXPECT_EQ(s.ledger[2], req);
  EXPECT_THROW(SisaUnlearn(s, d, {req}), ValidationError);
}

TEST(SisaTest, SpreadRequestRetrainsAll) {
  const Dataset d = Data(100);
  Ensemble s = SisaBuild(d, 4, {4}, kTrain);
  std::vector<SampleId> ids;
  for (std::size_t i = 0; i < 4; ++i) ids.push_back(s.partition.part(i)[0]);
  const SisaOutcome out = SisaUnlearn(s, d, {MakeIdSet(ids)});
  EXPECT_EQ(out.retrained_slots.size(), 4u);
}

TEST(SisaTest, EmptiedShardIsRejected) {
  const Dataset d = Data(20);
  Ensemble s = SisaBuild(d, 4, {3}, kTrain);
  EXPECT_THROW(SisaUnlearn(s, d, {s.partition.part(1)}), ValidationError);
  Ensemble roel = BuildRoel(d, 4, {3}, kTrain);
  EXPECT_THROW(SisaUnlearn(roel, d, {{0}}), ValidationError);
}

TEST(RelabelTest, LabelsNeverMatchTruth) {
  Rng rng(2);
  std::vector<int> labels(5000);
  for (int& y : labels) y = static_cast<int>(rng.Below(4));
  const std::vector<int> fake = RandomOtherLabels(labels, 4, 9);
  std::vector<int> counts(4, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    EXPECT_NE(fake[i], labels[i]);
    ASSERT_GE(fake[i], 0);
    ASSERT_LT(fake[i], 4);
    ++counts[fake[i]];
  }
  for (int c : counts) EXPECT_GT(c, 1000);
  EXPECT_EQ(RandomOtherLabels(labels, 4, 9), fake);
  EXPECT_THROW(RandomOtherLabels(labels, 1, 9), ValidationError);
}

TEST(RelabelTest, AccuracyOnErasedDataDrops) {
  const Dataset d = Data(300, 3.0);
  const MlpModel model = TrainSingle(d, {16}, {.learning_rate = 0.1,
                                              .epochs = 20,
                                              .batch_size = 16,
                                              .seed = 4});
  const UnlearnRequest req = SampleUnlearning(d, 0.1, 8);
  const Dataset unlearn = d.Subset(req.sample_ids);
  const double before = Accuracy(model, unlearn.features(), unlearn.labels());
  const MlpModel after = RelabelUnlearn(
      model, unlearn, {.learning_rate = 0.1, .epochs = 5, .batch_size = 8,
                       .seed = 6});
  EXPECT_LT(Accuracy(after, unlearn.features(), unlearn.labels()), before);

  Ensemble e = BuildRoel(d, 3, {8}, kTrain);
  const double ens_before = Accuracy(e, unlearn.features(), unlearn.labels());
  RelabelUnlearn(e, unlearn, {.learning_rate = 0.1, .epochs = 5,
                              .batch_size = 8, .seed = 6});
  EXPECT_LT(Accuracy(e, unlearn.features(), unlearn.labels()), ens_before);
}

TEST(RelabelTest, ZeroEpochsIsNoOp) {
  const Dataset d = Data(60);
  const MlpModel model = TrainSingle(d, {4}, kTrain);
  TrainConfig none = kTrain;
  none.epochs = 0;
  const IdSet one{d.ids()[0]}, none_ids;
  EXPECT_EQ(RelabelUnlearn(model, d.Subset(one), none), model);
  EXPECT_THROW(RelabelUnlearn(model, d.Subset(none_ids), kTrain),
               ValidationError);
}

TEST(RetrainTest, RetrainEnsembleSlowerThanDistillation) {
  const Dataset d = Data(1500, 2.0);
  const TrainConfig train{.learning_rate = 0.1, .epochs = 10,
                          .batch_size = 32, .seed = 1};
  const Ensemble target = BuildRoel(d, 5, {32}, train);
  const UnlearnRequest req = SampleUnlearning(d, 0.01, 3);
  const Dataset remaining = Without(d, req.sample_ids);

  Ensemble copy = target;
  const double etid = TimePhase([&] { HandleRequest(copy, d, req, {}); });
  const double retrain =
      TimePhase([&] { RetrainEnsemble(remaining, 5, {32}, train); });
  EXPECT_GT(retrain, etid);
}

}  // namespace
}  // namespace etid
