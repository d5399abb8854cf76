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

// Reference-oriented ensembles. The training set is split into K disjoint
// parts and sub-model i is trained on everything except part i. Any two
// sub-models then share K-2 parts and differ in one part each, so sub-model
// i can stand in for a model retrained without data from part i when
// erasing that data from the other sub-models.

#ifndef ETID_ROEL_H_
#define ETID_ROEL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "etid/dataset.h"
#include "etid/matrix.h"
#include "etid/nn.h"
#include "etid/parallel.h"

namespace etid {

enum class EnsembleKind {
  kLeaveOneOut,  // sub-model i sees every part but i
  kShard,        // sub-model i sees part i only
};

struct Ensemble {
  EnsembleKind kind = EnsembleKind::kLeaveOneOut;
  std::vector<std::size_t> hidden;
  TrainConfig train_config;
  PartitionMap partition;
  std::vector<MlpModel> sub_models;
  // Erased ids, grouped by the part they belonged to.
  std::vector<IdSet> ledger;
  // Bumped whenever any sub-model's parameters are replaced.
  std::uint64_t generation = 0;

  std::size_t k() const { return sub_models.size(); }

  // Ids sub-model i was originally built from.
  IdSet TrainingIds(std::size_t i) const;
  // TrainingIds(i) minus everything erased so far.
  IdSet EffectiveTrainingIds(std::size_t i) const;
  IdSet LedgerIds() const;

  void Validate() const;
};

// Per-slot record of every id that reached a gradient step.
struct TrainingAudit {
  std::vector<IdSet> seen;
};

Ensemble BuildRoel(const Dataset& train, std::size_t k,
                   const std::vector<std::size_t>& hidden,
                   const TrainConfig& config, const ExecPolicy& exec = {},
                   TrainingAudit* audit = nullptr);

// Trains a fresh model for slot i on `ids` using the slot's fixed seeds.
// Used for initial construction and for from-scratch slot retraining.
MlpModel TrainSlot(const Ensemble& ensemble, const Dataset& data,
                   std::size_t slot, const IdSet& ids,
                   IdSet* seen = nullptr);

// Mean of the sub-model posteriors.
Matrix Predict(const Ensemble& ensemble, const Matrix& x);

// Returned by DeltaAlike when two id sets have no unique samples.
inline constexpr double kInfiniteDelta = std::numeric_limits<double>::infinity();

// |A ∩ B| / max(|A| - |A ∩ B|, |B| - |A ∩ B|); kInfiniteDelta when the
// denominator is zero.
double DeltaAlike(const IdSet& a, const IdSet& b);

struct RetrainedAlikeCheck {
  bool ok = false;
  double ratio = 0.0;
};

// Whether sub-model `ref_part` can serve as the reference for erasing
// `pending` (ids of part `ref_part`) from sub-model `target_part`: the
// delta between the reference's effective training ids and the ids the
// target would be retrained on must be at least one.
RetrainedAlikeCheck IsRetrainedAlike(const Ensemble& ensemble,
                                     std::size_t ref_part,
                                     std::size_t target_part,
                                     const IdSet& pending);

// Directory layout: manifest.json plus sub_model_<i>.ckpt per slot.
void SaveEnsemble(const Ensemble& ensemble, const std::filesystem::path& dir);
Ensemble LoadEnsemble(const std::filesystem::path& dir);

}  // namespace etid

#endif  // ETID_ROEL_H_
