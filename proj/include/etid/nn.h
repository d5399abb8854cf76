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

// Dense feed-forward classifier: ReLU hidden layers, softmax output, plain
// mini-batch SGD on either hard-label cross-entropy or KL divergence toward
// soft target rows. Every model in the system (sub-models, references,
// baselines, membership-inference attackers) is an MlpModel.

#ifndef ETID_NN_H_
#define ETID_NN_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "etid/matrix.h"

namespace etid {

// Lower clamp applied to probabilities before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

enum class LossKind { kCrossEntropy, kKlToTargets };

std::string_view LossKindName(LossKind kind);
LossKind ParseLossKind(std::string_view name);

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  bool shuffle = true;
  LossKind loss = LossKind::kCrossEntropy;
  // Early stop when the full-data loss at an epoch boundary falls below
  // this value. Zero disables the check.
  double stop_below = 0.0;

  void Validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct DenseLayer {
  Matrix weights;  // in_dim x out_dim
  std::vector<double> biases;

  bool operator==(const DenseLayer&) const = default;
};

class MlpModel {
 public:
  MlpModel() = default;
  // All parameters zero. layer_sizes = {inputs, hidden..., classes}.
  explicit MlpModel(std::vector<std::size_t> layer_sizes);

  // Glorot-uniform weights, zero biases.
  static MlpModel Initialized(std::vector<std::size_t> layer_sizes,
                              std::uint64_t seed);

  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  std::size_t input_dim() const { return layer_sizes_.front(); }
  std::size_t num_classes() const { return layer_sizes_.back(); }
  std::size_t num_parameters() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  bool operator==(const MlpModel&) const = default;

 private:
  std::vector<std::size_t> layer_sizes_;
  std::vector<DenseLayer> layers_;
};

using Gradients = std::vector<DenseLayer>;

// Supervision for one batch: either class ids or probability rows.
class Targets {
 public:
  Targets(std::span<const int> labels) : labels_(labels) {}
  Targets(const std::vector<int>& labels) : labels_(labels) {}
  Targets(const Matrix& soft) : soft_(&soft) {}

  bool is_hard() const { return soft_ == nullptr; }
  std::span<const int> labels() const { return labels_; }
  const Matrix& soft() const { return *soft_; }
  std::size_t rows() const { return is_hard() ? labels_.size() : soft_->rows(); }

 private:
  std::span<const int> labels_;
  const Matrix* soft_ = nullptr;
};

struct LossAndGradients {
  double loss = 0.0;
  Gradients gradients;
};

// Per-row class posteriors. Rows sum to one and are strictly positive.
Matrix Forward(const MlpModel& model, const Matrix& x);

inline Matrix Predict(const MlpModel& model, const Matrix& x) {
  return Forward(model, x);
}

// Mean loss over rows. Cross-entropy requires hard labels; KL requires soft
// rows and measures KL(targets || model).
double Loss(const MlpModel& model, const Matrix& x, const Targets& targets,
            LossKind kind);

LossAndGradients ComputeLossAndGradients(const MlpModel& model,
                                         const Matrix& x,
                                         const Targets& targets,
                                         LossKind kind);

// Row-mean KL(p || q) with the same clamping as the training loss.
double MeanKl(const Matrix& p, const Matrix& q);

struct TrainHooks {
  // Row indices (into x) of every mini-batch, before its gradient step.
  std::function<void(std::span<const std::size_t>)> on_batch;
};

// Mini-batch SGD. A pure function of (model, data, config); epochs == 0
// returns the model unchanged.
MlpModel Train(MlpModel model, const Matrix& x, const Targets& targets,
               const TrainConfig& config, const TrainHooks* hooks = nullptr);

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string EncodeCheckpoint(const MlpModel& model);
MlpModel DecodeCheckpoint(std::string_view bytes);
void SaveCheckpoint(const MlpModel& model, const std::filesystem::path& path);
MlpModel LoadCheckpoint(const std::filesystem::path& path);

}  // namespace etid

#endif  // ETID_NN_H_
