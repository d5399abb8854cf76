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

#ifndef ETID_DATASET_H_
#define ETID_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "etid/matrix.h"

namespace etid {

using SampleId = std::uint64_t;

// Sorted, duplicate-free list of sample ids.
using IdSet = std::vector<SampleId>;

IdSet MakeIdSet(std::vector<SampleId> ids);
IdSet Union(const IdSet& a, const IdSet& b);
IdSet Intersection(const IdSet& a, const IdSet& b);
IdSet Difference(const IdSet& a, const IdSet& b);
std::size_t IntersectionSize(const IdSet& a, const IdSet& b);
bool Contains(const IdSet& set, SampleId id);

// Labelled samples addressed by stable ids. Immutable once built.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Matrix features, std::vector<int> labels, std::vector<SampleId> ids,
          int num_classes);

  std::size_t size() const { return ids_.size(); }
  std::size_t num_features() const { return features_.cols(); }
  int num_classes() const { return num_classes_; }

  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<SampleId>& ids() const { return ids_; }
  IdSet IdSetOf() const { return MakeIdSet(ids_); }

  bool Has(SampleId id) const { return index_.contains(id); }
  // Row of `id`; ValidationError if absent.
  std::size_t IndexOf(SampleId id) const;
  std::vector<std::size_t> IndicesOf(std::span<const SampleId> ids) const;

  // Rows for the given ids, in the given order.
  Dataset Subset(std::span<const SampleId> ids) const;
  Dataset SubsetRows(std::span<const std::size_t> rows) const;

 private:
  Matrix features_;
  std::vector<int> labels_;
  std::vector<SampleId> ids_;
  int num_classes_ = 0;
  std::unordered_map<SampleId, std::size_t> index_;
};

struct SyntheticSpec {
  std::size_t n = 5000;
  std::size_t features = 20;
  std::size_t classes = 5;
  double cluster_spread = 1.0;
  std::uint64_t seed = 0;
};

// One Gaussian cluster per class around a seeded N(0, I) center.
// Class sizes differ by at most one; ids are 0..n-1.
Dataset GenerateSynthetic(const SyntheticSpec& spec);

// Header: id,label,f0,...,f{F-1}.
Dataset LoadCsv(const std::filesystem::path& path);
void SaveCsv(const Dataset& data, const std::filesystem::path& path);

struct Split {
  Dataset train;
  Dataset test;
};

// Seeded shuffle; round(ratio * N) rows go to train. Both halves keep the
// original relative row order.
Split SplitDataset(const Dataset& data, double train_ratio, std::uint64_t seed);

// Assignment of every training id to one of K disjoint parts whose sizes
// differ by at most one.
class PartitionMap {
 public:
  PartitionMap() = default;
  // parts[i] must be pairwise disjoint.
  explicit PartitionMap(std::vector<IdSet> parts);

  std::size_t k() const { return parts_.size(); }
  const std::vector<IdSet>& parts() const { return parts_; }
  const IdSet& part(std::size_t i) const { return parts_.at(i); }
  std::vector<std::size_t> part_sizes() const;
  IdSet AllIds() const;

  bool Has(SampleId id) const { return assignment_.contains(id); }
  std::size_t PartOf(SampleId id) const;

 private:
  std::vector<IdSet> parts_;
  std::unordered_map<SampleId, std::size_t> assignment_;
};

inline constexpr std::size_t kMinEnsembleParts = 3;

// Random K-way partition. Requires K >= 3, which is what makes every pair of
// leave-one-part-out sub-models at least 1-alike.
PartitionMap Partition(const Dataset& train, std::size_t k, std::uint64_t seed);

// Same assignment rule without the K >= 3 requirement (shard ensembles).
PartitionMap PartitionShards(const Dataset& train, std::size_t k,
                             std::uint64_t seed);

// Ids of every part except part i.
IdSet LeaveOneOut(const PartitionMap& partition, std::size_t i);

struct UnlearnRequest {
  IdSet sample_ids;
};

// round(ratio * N) ids drawn uniformly without replacement.
UnlearnRequest SampleUnlearning(const Dataset& train, double ratio,
                                std::uint64_t seed);

// Same, restricted to ids not in `exclude` (already erased).
UnlearnRequest SampleUnlearning(const Dataset& train, double ratio,
                                std::uint64_t seed, const IdSet& exclude);

// Newline-separated ids; blank lines and '#' comments ignored.
UnlearnRequest LoadRequest(const std::filesystem::path& path);

// K groups; group i = request ∩ part i (possibly empty).
std::vector<IdSet> GroupByPart(const UnlearnRequest& request,
                               const PartitionMap& partition);

}  // namespace etid

#endif  // ETID_DATASET_H_
