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

#include "etid/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>
#include <string_view>

#include "etid/random.h"

namespace etid {
namespace {

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
bool ParseNumber(std::string_view s, T& out) {
  s = Trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

PartitionMap AssignParts(const Dataset& train, std::size_t k,
                         std::uint64_t seed) {
  if (train.size() < k) {
    throw ValidationError("cannot split " + std::to_string(train.size()) +
                          " samples into " + std::to_string(k) + " parts");
  }
  std::vector<SampleId> ids = train.ids();
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  rng.Shuffle(ids);
  std::vector<std::vector<SampleId>> parts(k);
  for (std::size_t i = 0; i < ids.size(); ++i) parts[i % k].push_back(ids[i]);
  std::vector<IdSet> sets;
  sets.reserve(k);
  for (auto& p : parts) sets.push_back(MakeIdSet(std::move(p)));
  return PartitionMap(std::move(sets));
}

}  // namespace

IdSet MakeIdSet(std::vector<SampleId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

IdSet Union(const IdSet& a, const IdSet& b) {
  IdSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(out));
  return out;
}

IdSet Intersection(const IdSet& a, const IdSet& b) {
  IdSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

IdSet Difference(const IdSet& a, const IdSet& b) {
  IdSet out;
  out.reserve(a.size());
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

std::size_t IntersectionSize(const IdSet& a, const IdSet& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

bool Contains(const IdSet& set, SampleId id) {
  return std::binary_search(set.begin(), set.end(), id);
}

Dataset::Dataset(Matrix features, std::vector<int> labels,
                 std::vector<SampleId> ids, int num_classes)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      ids_(std::move(ids)),
      num_classes_(num_classes) {
  if (features_.rows() != ids_.size() || labels_.size() != ids_.size()) {
    throw ShapeError("dataset features/labels/ids disagree in length");
  }
  if (num_classes_ < 1) throw ValidationError("num_classes must be >= 1");
  for (int y : labels_) {
    if (y < 0 || y >= num_classes_) {
      throw ValidationError("label " + std::to_string(y) + " out of range [0, " +
                            std::to_string(num_classes_) + ")");
    }
  }
  for (double v : features_.data()) {
    if (!std::isfinite(v)) throw ValidationError("non-finite feature value");
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw ValidationError("duplicate sample id " + std::to_string(ids_[i]));
    }
  }
}

std::size_t Dataset::IndexOf(SampleId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw ValidationError("unknown sample id " + std::to_string(id));
  }
  return it->second;
}

std::vector<std::size_t> Dataset::IndicesOf(
    std::span<const SampleId> ids) const {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (SampleId id : ids) rows.push_back(IndexOf(id));
  return rows;
}

Dataset Dataset::Subset(std::span<const SampleId> ids) const {
  const auto rows = IndicesOf(ids);
  return SubsetRows(rows);
}

Dataset Dataset::SubsetRows(std::span<const std::size_t> rows) const {
  std::vector<int> labels;
  std::vector<SampleId> ids;
  labels.reserve(rows.size());
  ids.reserve(rows.size());
  for (std::size_t r : rows) {
    labels.push_back(labels_.at(r));
    ids.push_back(ids_.at(r));
  }
  return Dataset(features_.SelectRows(rows), std::move(labels),
                 std::move(ids), num_classes_);
}

Dataset GenerateSynthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2 || spec.n < spec.classes || spec.features < 1) {
    throw ValidationError("synthetic data needs n >= classes >= 2, f >= 1");
  }
  if (!(spec.cluster_spread >= 0.0) || !std::isfinite(spec.cluster_spread)) {
    throw ValidationError("cluster_spread must be finite and >= 0");
  }
  Rng rng(spec.seed);
  Matrix centers(spec.classes, spec.features);
  for (double& c : centers.data()) c = rng.Normal();

  std::vector<int> labels(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    labels[i] = static_cast<int>(i % spec.classes);
  }
  rng.Shuffle(labels);

  Matrix x(spec.n, spec.features);
  for (std::size_t i = 0; i < spec.n; ++i) {
    auto center = centers.row(static_cast<std::size_t>(labels[i]));
    auto row = x.row(i);
    for (std::size_t f = 0; f < spec.features; ++f) {
      row[f] = center[f] + spec.cluster_spread * rng.Normal();
    }
  }
  std::vector<SampleId> ids(spec.n);
  std::iota(ids.begin(), ids.end(), SampleId{0});
  return Dataset(std::move(x), std::move(labels), std::move(ids),
                 static_cast<int>(spec.classes));
}

Dataset LoadCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  const auto header = SplitFields(line);
  if (header.size() < 3 || Trim(header[0]) != "id" ||
      Trim(header[1]) != "label") {
    throw ParseError(1, "header must be id,label,f0,...");
  }
  const std::size_t num_features = header.size() - 2;
  for (std::size_t f = 0; f < num_features; ++f) {
    if (Trim(header[f + 2]) != "f" + std::to_string(f)) {
      throw ParseError(1, "expected column f" + std::to_string(f));
    }
  }

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<SampleId> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto fields = SplitFields(line);
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) +
                                    " fields, got " +
                                    std::to_string(fields.size()));
    }
    SampleId id;
    int label;
    if (!ParseNumber(fields[0], id)) throw ParseError(line_no, "bad id");
    if (!ParseNumber(fields[1], label) || label < 0) {
      throw ParseError(line_no, "bad label");
    }
    for (std::size_t f = 0; f < num_features; ++f) {
      double v;
      if (!ParseNumber(fields[f + 2], v) || !std::isfinite(v)) {
        throw ParseError(line_no, "bad feature f" + std::to_string(f));
      }
      values.push_back(v);
    }
    ids.push_back(id);
    labels.push_back(label);
  }
  if (ids.empty()) throw ValidationError("CSV has no data rows");
  const int num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  const std::size_t n = ids.size();
  return Dataset(Matrix(n, num_features, std::move(values)), std::move(labels),
                 std::move(ids), num_classes);
}

void SaveCsv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "id,label";
  for (std::size_t f = 0; f < data.num_features(); ++f) out << ",f" << f;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < data.size(); ++r) {
    out << data.ids()[r] << ',' << data.labels()[r];
    for (double v : data.features().row(r)) {
      // Shortest round-trip representation.
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out << ',' << std::string_view(buf, res.ptr - buf);
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

Split SplitDataset(const Dataset& data, double train_ratio,
                   std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw ValidationError("train_ratio must be in (0, 1)");
  }
  const std::size_t n = data.size();
  const auto n_train =
      static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(n)));
  if (n_train == 0 || n_train == n) {
    throw ValidationError("split leaves one side empty");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.Shuffle(order);
  std::vector<std::size_t> train_rows(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test_rows(order.begin() + n_train, order.end());
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {data.SubsetRows(train_rows), data.SubsetRows(test_rows)};
}

PartitionMap::PartitionMap(std::vector<IdSet> parts) : parts_(std::move(parts)) {
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    parts_[i] = MakeIdSet(std::move(parts_[i]));
    for (SampleId id : parts_[i]) {
      if (!assignment_.emplace(id, i).second) {
        throw ValidationError("sample id " + std::to_string(id) +
                              " assigned to more than one part");
      }
    }
  }
}

std::vector<std::size_t> PartitionMap::part_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.reserve(parts_.size());
  for (const IdSet& p : parts_) sizes.push_back(p.size());
  return sizes;
}

IdSet PartitionMap::AllIds() const {
  std::vector<SampleId> all;
  for (const IdSet& p : parts_) all.insert(all.end(), p.begin(), p.end());
  return MakeIdSet(std::move(all));
}

std::size_t PartitionMap::PartOf(SampleId id) const {
  auto it = assignment_.find(id);
  if (it == assignment_.end()) {
    throw ValidationError("sample id " + std::to_string(id) +
                          " is not in the partition");
  }
  return it->second;
}

PartitionMap Partition(const Dataset& train, std::size_t k,
                       std::uint64_t seed) {
  if (k < kMinEnsembleParts) {
    throw ValidationError(
        "K = " + std::to_string(k) +
        " is too small: leave-one-part-out ensembles need K >= 3 so that "
        "sub-models stay at least 1-alike");
  }
  return AssignParts(train, k, seed);
}

PartitionMap PartitionShards(const Dataset& train, std::size_t k,
                             std::uint64_t seed) {
  if (k < 2) throw ValidationError("shard count must be >= 2");
  return AssignParts(train, k, seed);
}

IdSet LeaveOneOut(const PartitionMap& partition, std::size_t i) {
  if (i >= partition.k()) {
    throw ValidationError("part index " + std::to_string(i) +
                          " out of range for K = " +
                          std::to_string(partition.k()));
  }
  std::vector<SampleId> ids;
  for (std::size_t p = 0; p < partition.k(); ++p) {
    if (p == i) continue;
    const IdSet& part = partition.part(p);
    ids.insert(ids.end(), part.begin(), part.end());
  }
  return MakeIdSet(std::move(ids));
}

UnlearnRequest SampleUnlearning(const Dataset& train, double ratio,
                                std::uint64_t seed) {
  return SampleUnlearning(train, ratio, seed, {});
}

UnlearnRequest SampleUnlearning(const Dataset& train, double ratio,
                                std::uint64_t seed, const IdSet& exclude) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ValidationError("unlearn ratio must be in (0, 1)");
  }
  const auto count = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(train.size())));
  if (count == 0) {
    throw ValidationError("unlearn ratio " + std::to_string(ratio) +
                          " selects no samples out of " +
                          std::to_string(train.size()));
  }
  IdSet pool = Difference(train.IdSetOf(), exclude);
  if (count > pool.size()) {
    throw ValidationError("not enough un-erased samples to draw from");
  }
  Rng rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(pool[i], pool[i + rng.Below(pool.size() - i)]);
  }
  pool.resize(count);
  return {MakeIdSet(std::move(pool))};
}

UnlearnRequest LoadRequest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<SampleId> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = Trim(line);
    if (s.empty() || s.front() == '#') continue;
    SampleId id;
    if (!ParseNumber(s, id)) throw ParseError(line_no, "bad sample id");
    ids.push_back(id);
  }
  const std::size_t raw = ids.size();
  IdSet set = MakeIdSet(std::move(ids));
  if (set.size() != raw) {
    throw ValidationError("request file lists an id more than once");
  }
  return {std::move(set)};
}

std::vector<IdSet> GroupByPart(const UnlearnRequest& request,
                               const PartitionMap& partition) {
  std::vector<IdSet> groups(partition.k());
  for (SampleId id : request.sample_ids) {
    groups[partition.PartOf(id)].push_back(id);
  }
  return groups;  // already sorted: request ids are sorted
}

}  // namespace etid
