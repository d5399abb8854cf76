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

// Iterative distillation-based erasure for leave-one-part-out ensembles.
//
// A request is grouped by part. For every non-empty group i, a snapshot of
// sub-model i (which never saw part i) becomes the reference, and every
// other sub-model is fine-tuned so that its posteriors on the group match
// the reference's (KL distillation). All sub-models are then rectified with
// cross-entropy on their own remaining data, and the erased ids are
// recorded in the ensemble's ledger so later requests see the reduced
// training sets.

#ifndef ETID_TID_H_
#define ETID_TID_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "etid/dataset.h"
#include "etid/nn.h"
#include "etid/parallel.h"
#include "etid/roel.h"
#include "json.hpp"

namespace etid {

// Distillation stops early once the KL objective drops below this.
inline constexpr double kDistillStopTolerance = 1e-6;

struct UnlearnConfig {
  TrainConfig distill{.learning_rate = 0.1,
                      .epochs = 100,
                      .batch_size = 64,
                      .seed = 0,
                      .shuffle = true,
                      .loss = LossKind::kKlToTargets,
                      .stop_below = kDistillStopTolerance};
  TrainConfig rectify{.learning_rate = 0.01,
                      .epochs = 1,
                      .batch_size = 32,
                      .seed = 0,
                      .shuffle = true,
                      .loss = LossKind::kCrossEntropy,
                      .stop_below = 0.0};
  ExecPolicy exec;

  void Validate() const;
};

struct PairValidity {
  std::size_t ref_part = 0;
  std::size_t target_part = 0;
  double ratio = 0.0;
};

struct UnlearnSession {
  UnlearnRequest request;
  std::vector<IdSet> groups;
  // Snapshot of sub-model i for every non-empty group i.
  std::vector<std::optional<MlpModel>> references;
  std::vector<PairValidity> validity;
  TrainConfig distill_config;
  TrainConfig rectify_config;
  // Ensemble generation at snapshot time.
  std::uint64_t snapshot_generation = 0;
};

// Groups the request, snapshots references and checks every (reference,
// target) pair. Throws ValidityExpiredError (ensemble untouched) if any
// pair has ratio < 1, ValidationError for unknown or already erased ids.
UnlearnSession InitSession(const Ensemble& ensemble, const Dataset& train,
                           const UnlearnRequest& request,
                           const UnlearnConfig& config);

struct DistillOutcome {
  std::size_t ref_part = 0;
  std::size_t target_part = 0;
  double kl_before = 0.0;
  double kl_after = 0.0;
  // Summed L2 distance between the target's posteriors on the group before
  // and after distillation.
  double output_shift = 0.0;
};

// Distills every sub-model except `ref_part` toward `reference` on
// `x_group`. Targets are independent jobs.
std::vector<DistillOutcome> UnlearnSubset(Ensemble& ensemble,
                                          std::size_t ref_part,
                                          const MlpModel& reference,
                                          const Matrix& x_group,
                                          const TrainConfig& config,
                                          const ExecPolicy& exec);

// Cross-entropy fine-tuning of every sub-model on its training ids minus
// the ledger minus `in_flight`. Throws ValidationError if any such set is
// empty.
void Rectify(Ensemble& ensemble, const Dataset& train, const IdSet& in_flight,
             const TrainConfig& config, const ExecPolicy& exec,
             TrainingAudit* audit = nullptr);

// Drops the reference snapshots (the current sub-models are the references
// from now on) and appends the request to the ledger.
void UpdateReferencesAndLedger(Ensemble& ensemble, UnlearnSession& session);

struct PhaseSeconds {
  double init = 0.0;
  double distill = 0.0;
  double rectify = 0.0;
  double update = 0.0;
  double total = 0.0;
};

struct UnlearnReport {
  std::size_t request_size = 0;
  std::vector<std::size_t> group_sizes;
  std::vector<PairValidity> validity;
  std::size_t distill_iterations = 0;
  std::vector<DistillOutcome> distillation;
  std::optional<PhaseSeconds> seconds_serial;
  std::optional<PhaseSeconds> seconds_parallel;
  std::size_t ledger_total = 0;
  std::vector<std::size_t> ledger_per_part;
};

nlohmann::json ToJson(const UnlearnReport& report);

// Full request: init, per-group distillation in ascending part order,
// rectification, reference/ledger update. Timings go to the serial or
// parallel slot depending on config.exec.
UnlearnReport HandleRequest(Ensemble& ensemble, const Dataset& train,
                            const UnlearnRequest& request,
                            const UnlearnConfig& config,
                            TrainingAudit* rectify_audit = nullptr);

}  // namespace etid

#endif  // ETID_TID_H_
