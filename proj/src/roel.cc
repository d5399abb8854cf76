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

#include "etid/roel.h"

#include <algorithm>
#include <string>

#include "etid/random.h"
#include "etid/serialization.h"

namespace etid {
namespace {

constexpr int kManifestVersion = 1;

std::vector<std::size_t> LayerSizes(const Ensemble& e, const Dataset& data) {
  std::vector<std::size_t> sizes;
  sizes.push_back(data.num_features());
  sizes.insert(sizes.end(), e.hidden.begin(), e.hidden.end());
  sizes.push_back(static_cast<std::size_t>(data.num_classes()));
  return sizes;
}

std::string KindName(EnsembleKind kind) {
  return kind == EnsembleKind::kShard ? "shard" : "leave_one_out";
}

EnsembleKind ParseKind(const std::string& s) {
  if (s == "leave_one_out") return EnsembleKind::kLeaveOneOut;
  if (s == "shard") return EnsembleKind::kShard;
  throw FormatError("unknown ensemble kind '" + s + "'");
}

}  // namespace

IdSet Ensemble::TrainingIds(std::size_t i) const {
  if (kind == EnsembleKind::kShard) return partition.part(i);
  return LeaveOneOut(partition, i);
}

IdSet Ensemble::EffectiveTrainingIds(std::size_t i) const {
  return Difference(TrainingIds(i), LedgerIds());
}

IdSet Ensemble::LedgerIds() const {
  IdSet all;
  for (const IdSet& part : ledger) all = Union(all, part);
  return all;
}

void Ensemble::Validate() const {
  if (sub_models.size() != partition.k() || ledger.size() != partition.k()) {
    throw ValidationError("ensemble has " + std::to_string(sub_models.size()) +
                          " sub-models for a " +
                          std::to_string(partition.k()) + "-way partition");
  }
  for (std::size_t i = 1; i < sub_models.size(); ++i) {
    if (sub_models[i].layer_sizes() != sub_models[0].layer_sizes()) {
      throw ValidationError("sub-models disagree in architecture");
    }
  }
  for (std::size_t p = 0; p < ledger.size(); ++p) {
    for (SampleId id : ledger[p]) {
      if (!Contains(partition.part(p), id)) {
        throw ValidationError("ledger id " + std::to_string(id) +
                              " is not in part " + std::to_string(p));
      }
    }
  }
}

MlpModel TrainSlot(const Ensemble& ensemble, const Dataset& data,
                   std::size_t slot, const IdSet& ids, IdSet* seen) {
  if (ids.empty()) {
    throw ValidationError("slot " + std::to_string(slot) +
                          " has no training data");
  }
  const Dataset subset = data.Subset(ids);
  TrainConfig cfg = ensemble.train_config;
  cfg.seed = DeriveSeed(ensemble.train_config.seed, "slot-train", slot);
  MlpModel init = MlpModel::Initialized(
      LayerSizes(ensemble, data),
      DeriveSeed(ensemble.train_config.seed, "slot-init", slot));

  TrainHooks hooks;
  std::vector<SampleId> seen_ids;
  if (seen != nullptr) {
    hooks.on_batch = [&](std::span<const std::size_t> rows) {
      for (std::size_t r : rows) seen_ids.push_back(subset.ids()[r]);
    };
  }
  MlpModel model = Train(std::move(init), subset.features(),
                         Targets(subset.labels()), cfg, &hooks);
  if (seen != nullptr) *seen = MakeIdSet(std::move(seen_ids));
  return model;
}

Ensemble BuildRoel(const Dataset& train, std::size_t k,
                   const std::vector<std::size_t>& hidden,
                   const TrainConfig& config, const ExecPolicy& exec,
                   TrainingAudit* audit) {
  config.Validate();
  if (config.loss != LossKind::kCrossEntropy) {
    throw ValidationError("sub-models are trained with cross-entropy");
  }
  Ensemble e;
  e.kind = EnsembleKind::kLeaveOneOut;
  e.hidden = hidden;
  e.train_config = config;
  e.partition = Partition(train, k, DeriveSeed(config.seed, "partition"));
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

Matrix Predict(const Ensemble& ensemble, const Matrix& x) {
  if (ensemble.sub_models.empty()) throw ValidationError("empty ensemble");
  Matrix sum = Forward(ensemble.sub_models[0], x);
  for (std::size_t i = 1; i < ensemble.sub_models.size(); ++i) {
    const Matrix p = Forward(ensemble.sub_models[i], x);
    for (std::size_t j = 0; j < sum.data().size(); ++j) {
      sum.data()[j] += p.data()[j];
    }
  }
  const double inv_k = 1.0 / static_cast<double>(ensemble.sub_models.size());
  for (double& v : sum.data()) v *= inv_k;
  return sum;
}

double DeltaAlike(const IdSet& a, const IdSet& b) {
  if (a.empty() || b.empty()) {
    throw ValidationError("delta-alike needs two non-empty training sets");
  }
  const std::size_t shared = IntersectionSize(a, b);
  const std::size_t unique = std::max(a.size() - shared, b.size() - shared);
  if (unique == 0) return kInfiniteDelta;
  return static_cast<double>(shared) / static_cast<double>(unique);
}

RetrainedAlikeCheck IsRetrainedAlike(const Ensemble& ensemble,
                                     std::size_t ref_part,
                                     std::size_t target_part,
                                     const IdSet& pending) {
  if (ref_part == target_part) {
    throw ValidationError("reference and target must be different parts");
  }
  if (ref_part >= ensemble.k() || target_part >= ensemble.k()) {
    throw ValidationError("part index out of range");
  }
  for (SampleId id : pending) {
    if (!Contains(ensemble.partition.part(ref_part), id)) {
      throw ValidationError("pending id " + std::to_string(id) +
                            " is not in reference part " +
                            std::to_string(ref_part));
    }
  }
  const IdSet erased = ensemble.LedgerIds();
  const IdSet reference = Difference(ensemble.TrainingIds(ref_part), erased);
  const IdSet retrained = Difference(
      ensemble.TrainingIds(target_part), Union(erased, pending));
  const double delta = DeltaAlike(reference, retrained);
  return {delta >= 1.0, delta};
}

void SaveEnsemble(const Ensemble& ensemble, const std::filesystem::path& dir) {
  ensemble.Validate();
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format_version"] = kManifestVersion;
  manifest["kind"] = KindName(ensemble.kind);
  manifest["k"] = ensemble.k();
  manifest["hidden"] = ensemble.hidden;
  manifest["train_config"] = ensemble.train_config;
  manifest["generation"] = ensemble.generation;
  manifest["partition"] = ensemble.partition.parts();
  manifest["ledger"] = ensemble.ledger;
  nlohmann::json files = nlohmann::json::array();
  nlohmann::json seeds = nlohmann::json::array();
  for (std::size_t i = 0; i < ensemble.k(); ++i) {
    const std::string name = "sub_model_" + std::to_string(i) + ".ckpt";
    SaveCheckpoint(ensemble.sub_models[i], dir / name);
    files.push_back(name);
    seeds.push_back({{"init", DeriveSeed(ensemble.train_config.seed,
                                         "slot-init", i)},
                     {"train", DeriveSeed(ensemble.train_config.seed,
                                          "slot-train", i)}});
  }
  manifest["checkpoints"] = files;
  manifest["slot_seeds"] = seeds;
  WriteJsonFile(manifest, dir / "manifest.json");
}

Ensemble LoadEnsemble(const std::filesystem::path& dir) {
  const nlohmann::json manifest = ReadJsonFile(dir / "manifest.json");
  Ensemble e;
  try {
    if (manifest.at("format_version").get<int>() != kManifestVersion) {
      throw FormatError("unsupported ensemble manifest version");
    }
    e.kind = ParseKind(manifest.at("kind").get<std::string>());
    e.hidden = manifest.at("hidden").get<std::vector<std::size_t>>();
    e.train_config = manifest.at("train_config").get<TrainConfig>();
    e.generation = manifest.at("generation").get<std::uint64_t>();
    e.partition =
        PartitionMap(manifest.at("partition").get<std::vector<IdSet>>());
    e.ledger = manifest.at("ledger").get<std::vector<IdSet>>();
    for (auto& part : e.ledger) part = MakeIdSet(std::move(part));
    for (const auto& name : manifest.at("checkpoints")) {
      e.sub_models.push_back(LoadCheckpoint(dir / name.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError((dir / "manifest.json").string() + ": " + ex.what());
  }
  e.Validate();
  return e;
}

}  // namespace etid
