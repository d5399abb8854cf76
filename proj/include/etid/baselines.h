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

// Comparison methods: from-scratch retraining (single model and
// leave-one-out ensemble), shard ensembles with shard-local retraining, and
// random-relabel fine-tuning.

#ifndef ETID_BASELINES_H_
#define ETID_BASELINES_H_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "etid/dataset.h"
#include "etid/nn.h"
#include "etid/parallel.h"
#include "etid/roel.h"

namespace etid {

enum class BaselineKind { kRetrainSingle, kRetrainEnsemble, kSisa, kRelabel };

std::string_view BaselineName(BaselineKind kind);
BaselineKind ParseBaseline(std::string_view name);

// One model on all of `data`. Seeds derive from config.seed only, so the
// same call on the same data reproduces the same model.
MlpModel TrainSingle(const Dataset& data,
                     const std::vector<std::size_t>& hidden,
                     const TrainConfig& config, IdSet* seen = nullptr);

// From-scratch model on the remaining data.
MlpModel RetrainSingle(const Dataset& remaining,
                       const std::vector<std::size_t>& hidden,
                       const TrainConfig& config, IdSet* seen = nullptr);

// From-scratch leave-one-out ensemble on the remaining data.
Ensemble RetrainEnsemble(const Dataset& remaining, std::size_t k,
                         const std::vector<std::size_t>& hidden,
                         const TrainConfig& config,
                         const ExecPolicy& exec = {},
                         TrainingAudit* audit = nullptr);

// Shard ensemble: sub-model i trained on part i only.
Ensemble SisaBuild(const Dataset& train, std::size_t k,
                   const std::vector<std::size_t>& hidden,
                   const TrainConfig& config, const ExecPolicy& exec = {},
                   TrainingAudit* audit = nullptr);

struct SisaOutcome {
  std::vector<std::size_t> retrained_slots;
};

// Retrains from scratch every shard that intersects the request, on the
// shard minus everything erased so far. Other shards are untouched.
SisaOutcome SisaUnlearn(Ensemble& ensemble, const Dataset& train,
                        const UnlearnRequest& request,
                        const ExecPolicy& exec = {},
                        TrainingAudit* audit = nullptr);

// Uniform random labels over classes other than the true one.
std::vector<int> RandomOtherLabels(std::span<const int> labels,
                                   int num_classes, std::uint64_t seed);

// Cross-entropy fine-tuning on the unlearning samples with random wrong
// labels.
MlpModel RelabelUnlearn(MlpModel model, const Dataset& unlearn,
                        const TrainConfig& config);
// Applied to each sub-model; the same random labels for all of them.
void RelabelUnlearn(Ensemble& ensemble, const Dataset& unlearn,
                    const TrainConfig& config, const ExecPolicy& exec = {});

}  // namespace etid

#endif  // ETID_BASELINES_H_
