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

#include <string>

#include "etid/random.h"

namespace etid {

std::string_view BaselineName(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kRetrainSingle:
      return "retrain_single";
    case BaselineKind::kRetrainEnsemble:
      return "retrain_ensemble";
    case BaselineKind::kSisa:
      return "sisa";
    case BaselineKind::kRelabel:
      return "relabel";
  }
  return "unknown";
}

BaselineKind ParseBaseline(std::string_view name) {
  for (BaselineKind k :
       {BaselineKind::kRetrainSingle, BaselineKind::kRetrainEnsemble,
        BaselineKind::kSisa, BaselineKind::kRelabel}) {
    if (BaselineName(k) == name) return k;
  }
  throw ValidationError("unknown baseline '" + std::string(name) + "'");
}

MlpModel TrainSingle(const Dataset& data,
                     const std::vector<std::size_t>& hidden,
                     const TrainConfig& config, IdSet* seen) {
  if (data.size() == 0) throw ValidationError("no training data");
  std::vector<std::size_t> sizes{data.num_features()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(static_cast<std::size_t>(data.num_classes()));
  MlpModel init =
      MlpModel::Initialized(std::move(sizes), DeriveSeed(config.seed, "single-init"));
  TrainConfig cfg = config;
  cfg.seed = DeriveSeed(config.seed, "single-train");
  TrainHooks hooks;
  std::vector<SampleId> seen_ids;
  if (seen != nullptr) {
    hooks.on_batch = [&](std::span<const std::size_t> rows) {
      for (std::size_t r : rows) seen_ids.push_back(data.ids()[r]);
    };
  }
  MlpModel model = Train(std::move(init), data.features(),
                         Targets(data.labels()), cfg, &hooks);
  if (seen != nullptr) *seen = MakeIdSet(std::move(seen_ids));
  return model;
}

MlpModel RetrainSingle(const Dataset& remaining,
                       const std::vector<std::size_t>& hidden,
                       const TrainConfig& config, IdSet* seen) {
  if (remaining.size() == 0) {
    throw ValidationError("remaining data is empty; nothing to retrain on");
  }
  return TrainSingle(remaining, hidden, config, seen);
}

Ensemble RetrainEnsemble(const Dataset& remaining, std::size_t k,
                         const std::vector<std::size_t>& hidden,
                         const TrainConfig& config, const ExecPolicy& exec,
                         TrainingAudit* audit) {
  if (remaining.size() == 0) {
    throw ValidationError("remaining data is empty; nothing to retrain on");
  }
  return BuildRoel(remaining, k, hidden, config, exec, audit);
}

Ensemble SisaBuild(const Dataset& train, std::size_t k,
                   const std::vector<std::size_t>& hidden,
                   const TrainConfig& config, const ExecPolicy& exec,
                   TrainingAudit* audit) {
  config.Validate();
  Ensemble e;
  e.kind = EnsembleKind::kShard;
  e.hidden = hidden;
  e.train_config = config;
  e.partition = PartitionShards(train, k, DeriveSeed(config.seed, "partition"));
  e.sub_models.resize(k);
  e.ledger.assign(k, {});
  if (audit != nullptr) audit->seen.assign(k, {});
  ParallelFor(k, exec, [&](std::size_t i) {
    e.sub_models[i] =
        TrainSlot(e, train, i, e.TrainingIds(i),
                  audit != nullptr ? &audit->seen[i] : nullptr);
  });
  return e;
}

SisaOutcome SisaUnlearn(Ensemble& ensemble, const Dataset& train,
                        const UnlearnRequest& request,
                        const ExecPolicy& exec, TrainingAudit* audit) {
  if (ensemble.kind != EnsembleKind::kShard) {
    throw ValidationError("shard unlearning needs a shard ensemble");
  }
  const IdSet erased = ensemble.LedgerIds();
  for (SampleId id : request.sample_ids) {
    if (Contains(erased, id)) {
      throw ValidationError("sample id " + std::to_string(id) +
                            " has already been unlearned");
    }
  }
  const std::vector<IdSet> groups = GroupByPart(request, ensemble.partition);
  const IdSet gone = Union(erased, request.sample_ids);
  SisaOutcome outcome;
  std::vector<IdSet> remaining(ensemble.k());
  for (std::size_t i = 0; i < ensemble.k(); ++i) {
    if (groups[i].empty()) continue;
    remaining[i] = Difference(ensemble.TrainingIds(i), gone);
    if (remaining[i].empty()) {
      throw ValidationError("request empties shard " + std::to_string(i));
    }
    outcome.retrained_slots.push_back(i);
  }
  if (audit != nullptr) audit->seen.assign(ensemble.k(), {});
  ParallelFor(outcome.retrained_slots.size(), exec, [&](std::size_t t) {
    const std::size_t i = outcome.retrained_slots[t];
    ensemble.sub_models[i] =
        TrainSlot(ensemble, train, i, remaining[i],
                  audit != nullptr ? &audit->seen[i] : nullptr);
  });
  for (std::size_t i = 0; i < ensemble.k(); ++i) {
    ensemble.ledger[i] = Union(ensemble.ledger[i], groups[i]);
  }
  if (!outcome.retrained_slots.empty()) ++ensemble.generation;
  return outcome;
}

std::vector<int> RandomOtherLabels(std::span<const int> labels,
                                   int num_classes, std::uint64_t seed) {
  if (num_classes < 2) {
    throw ValidationError("relabelling needs at least two classes");
  }
  Rng rng(seed);
  std::vector<int> out;
  out.reserve(labels.size());
  for (int y : labels) {
    // Draw from the C-1 other classes directly.
    int r = static_cast<int>(rng.Below(static_cast<std::uint64_t>(num_classes - 1)));
    if (r >= y) ++r;
    out.push_back(r);
  }
  return out;
}

MlpModel RelabelUnlearn(MlpModel model, const Dataset& unlearn,
                        const TrainConfig& config) {
  if (unlearn.size() == 0) throw ValidationError("no unlearning samples");
  const std::vector<int> fake = RandomOtherLabels(
      unlearn.labels(), unlearn.num_classes(), DeriveSeed(config.seed, "relabel"));
  TrainConfig cfg = config;
  cfg.seed = DeriveSeed(config.seed, "relabel-train");
  return Train(std::move(model), unlearn.features(), Targets(fake), cfg);
}

void RelabelUnlearn(Ensemble& ensemble, const Dataset& unlearn,
                    const TrainConfig& config, const ExecPolicy& exec) {
  if (unlearn.size() == 0) throw ValidationError("no unlearning samples");
  const std::vector<int> fake = RandomOtherLabels(
      unlearn.labels(), unlearn.num_classes(), DeriveSeed(config.seed, "relabel"));
  ParallelFor(ensemble.k(), exec, [&](std::size_t i) {
    TrainConfig cfg = config;
    cfg.seed = DeriveSeed(config.seed, "relabel-train", i);
    ensemble.sub_models[i] = Train(std::move(ensemble.sub_models[i]),
                                   unlearn.features(), Targets(fake), cfg);
  });
  ++ensemble.generation;
}

}  // namespace etid
