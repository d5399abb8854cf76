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

#include "etid/nn.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "etid/random.h"

namespace etid {
namespace {

constexpr double kSoftTargetTolerance = 1e-6;

void CheckInput(const MlpModel& model, const Matrix& x) {
  if (model.layers().empty()) throw ShapeError("model has no layers");
  if (x.cols() != model.input_dim()) {
    throw ShapeError("input has " + std::to_string(x.cols()) +
                     " columns, model expects " +
                     std::to_string(model.input_dim()));
  }
}

void CheckTargets(const MlpModel& model, const Matrix& x,
                  const Targets& targets, LossKind kind) {
  if (targets.rows() != x.rows()) {
    throw ShapeError("target rows " + std::to_string(targets.rows()) +
                     " != input rows " + std::to_string(x.rows()));
  }
  const std::size_t classes = model.num_classes();
  if (kind == LossKind::kCrossEntropy) {
    if (!targets.is_hard()) {
      throw ValidationError("cross-entropy loss requires hard labels");
    }
    for (int y : targets.labels()) {
      if (y < 0 || static_cast<std::size_t>(y) >= classes) {
        throw ValidationError("label " + std::to_string(y) +
                              " out of range");
      }
    }
    return;
  }
  if (targets.is_hard()) {
    throw ValidationError("KL loss requires soft target rows");
  }
  const Matrix& soft = targets.soft();
  if (soft.cols() != classes) {
    throw ShapeError("soft targets have " + std::to_string(soft.cols()) +
                     " columns, model has " + std::to_string(classes) +
                     " classes");
  }
  for (std::size_t r = 0; r < soft.rows(); ++r) {
    double sum = 0.0;
    for (double p : soft.row(r)) {
      if (!(p >= 0.0)) {
        throw ValidationError("soft target row " + std::to_string(r) +
                              " has a negative or NaN entry");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSoftTargetTolerance) {
      throw ValidationError("soft target row " + std::to_string(r) +
                            " sums to " + std::to_string(sum));
    }
  }
}

// Activations of every layer for one batch; acts[0] is the input, acts.back()
// the softmax output. Hidden entries are post-ReLU.
std::vector<Matrix> ForwardAll(const MlpModel& model, const Matrix& x) {
  const auto& layers = model.layers();
  std::vector<Matrix> acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Matrix& in = acts.back();
    const DenseLayer& layer = layers[l];
    const std::size_t n_in = layer.weights.rows();
    const std::size_t n_out = layer.weights.cols();
    Matrix out(in.rows(), n_out);
    for (std::size_t r = 0; r < in.rows(); ++r) {
      auto z = out.row(r);
      std::copy(layer.biases.begin(), layer.biases.end(), z.begin());
      auto a = in.row(r);
      for (std::size_t i = 0; i < n_in; ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        auto w = layer.weights.row(i);
        for (std::size_t o = 0; o < n_out; ++o) z[o] += ai * w[o];
      }
      if (l + 1 < layers.size()) {
        for (double& v : z) v = v > 0.0 ? v : 0.0;
      } else {
        const double mx = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double& v : z) {
          v = std::exp(v - mx);
          sum += v;
        }
        for (double& v : z) {
          v = std::max(v / sum, std::numeric_limits<double>::min());
        }
      }
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

double ClampedLog(double p) { return std::log(std::max(p, kProbabilityFloor)); }

double RowLoss(std::span<const double> q, const Targets& targets,
               std::size_t r) {
  if (targets.is_hard()) return -ClampedLog(q[targets.labels()[r]]);
  auto p = targets.soft().row(r);
  double kl = 0.0;
  for (std::size_t c = 0; c < q.size(); ++c) {
    if (p[c] > 0.0) kl += p[c] * (ClampedLog(p[c]) - ClampedLog(q[c]));
  }
  // Clamping can push a near-zero divergence a few ulps negative.
  return std::max(kl, 0.0);
}

// d(row loss)/d(logits) of the clamped objective. With S the target mass on
// classes whose probability is above the floor: g_k = q_k * S - p_k [q_k
// above floor].
void RowLogitGradient(std::span<const double> q, const Targets& targets,
                      std::size_t r, std::span<double> g) {
  const std::size_t classes = q.size();
  double mass = 0.0;
  if (targets.is_hard()) {
    const auto y = static_cast<std::size_t>(targets.labels()[r]);
    const bool live = q[y] >= kProbabilityFloor;
    mass = live ? 1.0 : 0.0;
    for (std::size_t c = 0; c < classes; ++c) g[c] = q[c] * mass;
    if (live) g[y] -= 1.0;
    return;
  }
  auto p = targets.soft().row(r);
  for (std::size_t c = 0; c < classes; ++c) {
    if (q[c] >= kProbabilityFloor) mass += p[c];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    g[c] = q[c] * mass - (q[c] >= kProbabilityFloor ? p[c] : 0.0);
  }
}

LossAndGradients Backprop(const MlpModel& model, const Matrix& x,
                          const Targets& targets) {
  const auto& layers = model.layers();
  std::vector<Matrix> acts = ForwardAll(model, x);
  const std::size_t n = x.rows();
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;

  LossAndGradients result;
  result.gradients.resize(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    result.gradients[l].weights =
        Matrix(layers[l].weights.rows(), layers[l].weights.cols());
    result.gradients[l].biases.assign(layers[l].biases.size(), 0.0);
  }

  const Matrix& probs = acts.back();
  Matrix delta(n, model.num_classes());
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    total += RowLoss(probs.row(r), targets, r);
    RowLogitGradient(probs.row(r), targets, r, delta.row(r));
    for (double& d : delta.row(r)) d *= inv_n;
  }
  result.loss = total * inv_n;

  for (std::size_t l = layers.size(); l-- > 0;) {
    const Matrix& in = acts[l];
    DenseLayer& grad = result.gradients[l];
    const std::size_t n_in = layers[l].weights.rows();
    const std::size_t n_out = layers[l].weights.cols();
    for (std::size_t r = 0; r < n; ++r) {
      auto d = delta.row(r);
      auto a = in.row(r);
      for (std::size_t o = 0; o < n_out; ++o) grad.biases[o] += d[o];
      for (std::size_t i = 0; i < n_in; ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        auto gw = grad.weights.row(i);
        for (std::size_t o = 0; o < n_out; ++o) gw[o] += ai * d[o];
      }
    }
    if (l == 0) break;
    Matrix prev(n, n_in);
    for (std::size_t r = 0; r < n; ++r) {
      auto d = delta.row(r);
      auto a = in.row(r);
      auto pd = prev.row(r);
      for (std::size_t i = 0; i < n_in; ++i) {
        if (a[i] <= 0.0) continue;  // ReLU gate
        auto w = layers[l].weights.row(i);
        double s = 0.0;
        for (std::size_t o = 0; o < n_out; ++o) s += w[o] * d[o];
        pd[i] = s;
      }
    }
    delta = std::move(prev);
  }
  return result;
}

// Little-endian byte writer/reader for the checkpoint format.
void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

void PutF64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits >> (8 * i)));
  }
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  double F64() {
    Need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  std::string_view Bytes(std::size_t n) {
    Need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

constexpr std::string_view kMagic = "ETID";

}  // namespace

std::string_view LossKindName(LossKind kind) {
  switch (kind) {
    case LossKind::kCrossEntropy:
      return "cross_entropy";
    case LossKind::kKlToTargets:
      return "kl_to_targets";
  }
  return "unknown";
}

LossKind ParseLossKind(std::string_view name) {
  if (name == "cross_entropy") return LossKind::kCrossEntropy;
  if (name == "kl_to_targets") return LossKind::kKlToTargets;
  throw ValidationError("unknown loss kind '" + std::string(name) + "'");
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be positive");
  }
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(stop_below >= 0.0)) throw ValidationError("stop_below must be >= 0");
}

MlpModel::MlpModel(std::vector<std::size_t> layer_sizes)
    : layer_sizes_(std::move(layer_sizes)) {
  if (layer_sizes_.size() < 2) {
    throw ValidationError("an MLP needs at least input and output sizes");
  }
  for (std::size_t s : layer_sizes_) {
    if (s == 0) throw ValidationError("layer sizes must be positive");
  }
  layers_.resize(layer_sizes_.size() - 1);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].weights = Matrix(layer_sizes_[l], layer_sizes_[l + 1]);
    layers_[l].biases.assign(layer_sizes_[l + 1], 0.0);
  }
}

MlpModel MlpModel::Initialized(std::vector<std::size_t> layer_sizes,
                               std::uint64_t seed) {
  MlpModel model(std::move(layer_sizes));
  Rng rng(seed);
  for (DenseLayer& layer : model.layers_) {
    const double limit = std::sqrt(
        6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
    for (double& w : layer.weights.data()) w = rng.Uniform(-limit, limit);
  }
  return model;
}

std::size_t MlpModel::num_parameters() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers_) {
    n += layer.weights.data().size() + layer.biases.size();
  }
  return n;
}

Matrix Forward(const MlpModel& model, const Matrix& x) {
  CheckInput(model, x);
  return std::move(ForwardAll(model, x).back());
}

double Loss(const MlpModel& model, const Matrix& x, const Targets& targets,
            LossKind kind) {
  CheckInput(model, x);
  CheckTargets(model, x, targets, kind);
  if (x.rows() == 0) return 0.0;
  const Matrix probs = Forward(model, x);
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    total += RowLoss(probs.row(r), targets, r);
  }
  return total / static_cast<double>(x.rows());
}

LossAndGradients ComputeLossAndGradients(const MlpModel& model,
                                         const Matrix& x,
                                         const Targets& targets,
                                         LossKind kind) {
  CheckInput(model, x);
  CheckTargets(model, x, targets, kind);
  return Backprop(model, x, targets);
}

double MeanKl(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) {
    throw ShapeError("KL operands differ in shape");
  }
  if (p.rows() == 0) return 0.0;
  const Targets targets(p);
  double total = 0.0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    total += RowLoss(q.row(r), targets, r);
  }
  return total / static_cast<double>(p.rows());
}

MlpModel Train(MlpModel model, const Matrix& x, const Targets& targets,
               const TrainConfig& config, const TrainHooks* hooks) {
  config.Validate();
  CheckInput(model, x);
  CheckTargets(model, x, targets, config.loss);
  if (config.epochs == 0 || x.rows() == 0) return model;

  const std::size_t n = x.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);

  std::vector<int> batch_labels;
  Matrix batch_soft;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.stop_below > 0.0 &&
        Loss(model, x, targets, config.loss) < config.stop_below) {
      break;
    }
    if (config.shuffle) rng.Shuffle(order);
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const std::size_t end = std::min(n, begin + config.batch_size);
      std::span<const std::size_t> rows(order.data() + begin, end - begin);
      if (hooks != nullptr && hooks->on_batch) hooks->on_batch(rows);

      const Matrix bx = x.SelectRows(rows);
      LossAndGradients lg;
      if (targets.is_hard()) {
        batch_labels.clear();
        for (std::size_t r : rows) batch_labels.push_back(targets.labels()[r]);
        lg = Backprop(model, bx, Targets(batch_labels));
      } else {
        batch_soft = targets.soft().SelectRows(rows);
        lg = Backprop(model, bx, Targets(batch_soft));
      }
      for (std::size_t l = 0; l < model.layers().size(); ++l) {
        DenseLayer& layer = model.layers()[l];
        const DenseLayer& grad = lg.gradients[l];
        auto& w = layer.weights.data();
        const auto& gw = grad.weights.data();
        for (std::size_t i = 0; i < w.size(); ++i) {
          w[i] -= config.learning_rate * gw[i];
        }
        for (std::size_t i = 0; i < layer.biases.size(); ++i) {
          layer.biases[i] -= config.learning_rate * grad.biases[i];
        }
      }
    }
  }
  return model;
}

std::string EncodeCheckpoint(const MlpModel& model) {
  std::string out(kMagic);
  PutU32(out, kCheckpointVersion);
  PutU32(out, static_cast<std::uint32_t>(model.layer_sizes().size()));
  for (std::size_t s : model.layer_sizes()) {
    PutU32(out, static_cast<std::uint32_t>(s));
  }
  for (const DenseLayer& layer : model.layers()) {
    for (double w : layer.weights.data()) PutF64(out, w);
    for (double b : layer.biases) PutF64(out, b);
  }
  return out;
}

MlpModel DecodeCheckpoint(std::string_view bytes) {
  ByteReader in(bytes);
  if (in.Bytes(kMagic.size()) != kMagic) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  const std::uint32_t version = in.U32();
  if (version != kCheckpointVersion) {
    throw VersionMismatchError(version, kCheckpointVersion);
  }
  const std::uint32_t count = in.U32();
  if (count < 2 || count > 1024) {
    throw FormatError("implausible layer count " + std::to_string(count));
  }
  std::vector<std::size_t> sizes(count);
  for (auto& s : sizes) {
    s = in.U32();
    if (s == 0) throw FormatError("zero layer size");
  }
  MlpModel model(std::move(sizes));
  for (DenseLayer& layer : model.layers()) {
    for (double& w : layer.weights.data()) w = in.F64();
    for (double& b : layer.biases) b = in.F64();
  }
  if (!in.done()) throw FormatError("trailing bytes after checkpoint");
  return model;
}

void SaveCheckpoint(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const std::string bytes = EncodeCheckpoint(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

MlpModel LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return DecodeCheckpoint(buf.str());
}

}  // namespace etid
