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

#include "etid/tid.h"

#include <cmath>
#include <string>

#include "etid/random.h"
#include "etid/serialization.h"
#include "etid/timing.h"

namespace etid {
namespace {

double SummedRowDistance(const Matrix& a, const Matrix& b) {
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

nlohmann::json PhaseJson(const std::optional<PhaseSeconds>& s) {
  if (!s) return nullptr;
  return {{"init", s->init},
          {"distill", s->distill},
          {"rectify", s->rectify},
          {"update", s->update},
          {"total", s->total}};
}

}  // namespace

void UnlearnConfig::Validate() const {
  distill.Validate();
  rectify.Validate();
  if (distill.loss != LossKind::kKlToTargets) {
    throw ValidationError("distillation must use the kl_to_targets loss");
  }
  if (rectify.loss != LossKind::kCrossEntropy) {
    throw ValidationError("rectification must use the cross_entropy loss");
  }
}

UnlearnSession InitSession(const Ensemble& ensemble, const Dataset& train,
                           const UnlearnRequest& request,
                           const UnlearnConfig& config) {
  config.Validate();
  ensemble.Validate();
  if (ensemble.kind != EnsembleKind::kLeaveOneOut) {
    throw ValidationError("distillation unlearning needs a leave-one-out "
                          "ensemble");
  }
  if (request.sample_ids.empty()) {
    throw ValidationError("unlearning request is empty");
  }
  const IdSet erased = ensemble.LedgerIds();
  for (SampleId id : request.sample_ids) {
    if (!train.Has(id) || !ensemble.partition.Has(id)) {
      throw ValidationError("sample id " + std::to_string(id) +
                            " is not a training sample");
    }
    if (Contains(erased, id)) {
      throw ValidationError("sample id " + std::to_string(id) +
                            " has already been unlearned");
    }
  }

  UnlearnSession session;
  session.request = request;
  session.groups = GroupByPart(request, ensemble.partition);
  session.distill_config = config.distill;
  session.rectify_config = config.rectify;

  const std::size_t k = ensemble.k();
  for (std::size_t i = 0; i < k; ++i) {
    if (session.groups[i].empty()) continue;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      const RetrainedAlikeCheck check =
          IsRetrainedAlike(ensemble, i, j, session.groups[i]);
      session.validity.push_back({i, j, check.ratio});
      if (!check.ok) throw ValidityExpiredError(i, j, check.ratio);
    }
  }
  const IdSet gone = Union(erased, request.sample_ids);
  for (std::size_t j = 0; j < k; ++j) {
    if (Difference(ensemble.TrainingIds(j), gone).empty()) {
      throw ValidationError("request would leave sub-model " +
                            std::to_string(j) + " without remaining data");
    }
  }

  session.references.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!session.groups[i].empty()) {
      session.references[i] = ensemble.sub_models[i];
    }
  }
  session.snapshot_generation = ensemble.generation;
  return session;
}

std::vector<DistillOutcome> UnlearnSubset(Ensemble& ensemble,
                                          std::size_t ref_part,
                                          const MlpModel& reference,
                                          const Matrix& x_group,
                                          const TrainConfig& config,
                                          const ExecPolicy& exec) {
  const std::size_t k = ensemble.k();
  if (ref_part >= k) throw ValidationError("reference part out of range");
  std::vector<DistillOutcome> outcomes;
  if (x_group.empty()) return outcomes;

  const Matrix soft = Forward(reference, x_group);
  std::vector<std::size_t> targets;
  for (std::size_t j = 0; j < k; ++j) {
    if (j != ref_part) targets.push_back(j);
  }
  outcomes.resize(targets.size());
  ParallelFor(targets.size(), exec, [&](std::size_t t) {
    const std::size_t j = targets[t];
    MlpModel& model = ensemble.sub_models[j];
    const Matrix before = Forward(model, x_group);
    TrainConfig cfg = config;
    cfg.seed = DeriveSeed(DeriveSeed(config.seed, "distill", ref_part),
                          "target", j);
    model = Train(std::move(model), x_group, Targets(soft), cfg);
    const Matrix after = Forward(model, x_group);
    outcomes[t] = {ref_part, j, MeanKl(soft, before), MeanKl(soft, after),
                   SummedRowDistance(before, after)};
  });
  ++ensemble.generation;
  return outcomes;
}

void Rectify(Ensemble& ensemble, const Dataset& train, const IdSet& in_flight,
             const TrainConfig& config, const ExecPolicy& exec,
             TrainingAudit* audit) {
  config.Validate();
  const std::size_t k = ensemble.k();
  const IdSet gone = Union(ensemble.LedgerIds(), in_flight);
  std::vector<IdSet> remaining(k);
  for (std::size_t j = 0; j < k; ++j) {
    remaining[j] = Difference(ensemble.TrainingIds(j), gone);
    if (remaining[j].empty()) {
      throw ValidationError("sub-model " + std::to_string(j) +
                            " has no remaining data to rectify on");
    }
  }
  if (audit != nullptr) audit->seen.assign(k, {});
  if (config.epochs == 0) return;

  ParallelFor(k, exec, [&](std::size_t j) {
    const Dataset subset = train.Subset(remaining[j]);
    TrainConfig cfg = config;
    cfg.seed = DeriveSeed(config.seed, "rectify", j);
    TrainHooks hooks;
    std::vector<SampleId> seen;
    if (audit != nullptr) {
      hooks.on_batch = [&](std::span<const std::size_t> rows) {
        for (std::size_t r : rows) seen.push_back(subset.ids()[r]);
      };
    }
    ensemble.sub_models[j] =
        Train(std::move(ensemble.sub_models[j]), subset.features(),
              Targets(subset.labels()), cfg, &hooks);
    if (audit != nullptr) audit->seen[j] = MakeIdSet(std::move(seen));
  });
  ++ensemble.generation;
}

void UpdateReferencesAndLedger(Ensemble& ensemble, UnlearnSession& session) {
  for (std::size_t i = 0; i < ensemble.k(); ++i) {
    ensemble.ledger[i] = Union(ensemble.ledger[i], session.groups[i]);
  }
  session.references.clear();
}

nlohmann::json ToJson(const UnlearnReport& report) {
  nlohmann::json validity = nlohmann::json::array();
  for (const PairValidity& v : report.validity) {
    validity.push_back(
        {{"ref_part", v.ref_part}, {"target_part", v.target_part},
         {"ratio", v.ratio}});
  }
  nlohmann::json distill = nlohmann::json::array();
  for (const DistillOutcome& d : report.distillation) {
    distill.push_back({{"ref_part", d.ref_part},
                       {"target_part", d.target_part},
                       {"kl_before", d.kl_before},
                       {"kl_after", d.kl_after},
                       {"output_shift", d.output_shift}});
  }
  return {{"request_size", report.request_size},
          {"group_sizes", report.group_sizes},
          {"validity", validity},
          {"distill_iterations", report.distill_iterations},
          {"distillation", distill},
          {"seconds_serial", PhaseJson(report.seconds_serial)},
          {"seconds_parallel", PhaseJson(report.seconds_parallel)},
          {"ledger_total", report.ledger_total},
          {"ledger_per_part", report.ledger_per_part}};
}

UnlearnReport HandleRequest(Ensemble& ensemble, const Dataset& train,
                            const UnlearnRequest& request,
                            const UnlearnConfig& config,
                            TrainingAudit* rectify_audit) {
  UnlearnReport report;
  PhaseSeconds seconds;
  UnlearnSession session;
  seconds.init = TimePhase([&] {
    session = InitSession(ensemble, train, request, config);
  });

  // Every reference must predate the first parameter change.
  if (session.snapshot_generation != ensemble.generation) {
    throw Error("reference snapshots are stale");
  }
  seconds.distill = TimePhase([&] {
    for (std::size_t i = 0; i < ensemble.k(); ++i) {
      if (session.groups[i].empty()) continue;
      const Matrix x_group =
          train.Subset(session.groups[i]).features();
      auto outcomes = UnlearnSubset(ensemble, i, *session.references[i],
                                    x_group, session.distill_config,
                                    config.exec);
      report.distillation.insert(report.distillation.end(), outcomes.begin(),
                                 outcomes.end());
      ++report.distill_iterations;
    }
  });
  seconds.rectify = TimePhase([&] {
    Rectify(ensemble, train, request.sample_ids, session.rectify_config,
            config.exec, rectify_audit);
  });
  seconds.update = TimePhase([&] {
    UpdateReferencesAndLedger(ensemble, session);
  });
  seconds.total = seconds.init + seconds.distill + seconds.rectify +
                  seconds.update;

  report.request_size = request.sample_ids.size();
  for (const IdSet& g : session.groups) report.group_sizes.push_back(g.size());
  report.validity = session.validity;
  for (const IdSet& l : ensemble.ledger) {
    report.ledger_per_part.push_back(l.size());
    report.ledger_total += l.size();
  }
  if (config.exec.parallel) {
    report.seconds_parallel = seconds;
  } else {
    report.seconds_serial = seconds;
  }
  return report;
}

}  // namespace etid
