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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "etid/random.h"

namespace etid {
namespace {

Matrix RandomMatrix(std::size_t rows, std::size_t cols, Rng& rng,
                    double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = scale * rng.Normal();
  return m;
}

Matrix RandomDistributions(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (double& v : m.row(r)) sum += (v = rng.Uniform(0.05, 1.0));
    for (double& v : m.row(r)) v /= sum;
  }
  return m;
}

TEST(ForwardTest, ZeroModelGivesUniformRow) {
  MlpModel model({4, 2});
  const Matrix out = Forward(model, Matrix(3, 4, 1.7));
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_DOUBLE_EQ(out(r, 0), 0.5);
    EXPECT_DOUBLE_EQ(out(r, 1), 0.5);
  }
}

TEST(ForwardTest, SoftmaxOfLogThreeAndLogOne) {
  MlpModel model({1, 2});
  model.layers()[0].biases = {std::log(3.0), std::log(1.0)};
  const Matrix out = Forward(model, Matrix(1, 1, 0.0));
  // e^{ln 3} / (e^{ln 3} + e^{ln 1}) = 3 / 4.
  EXPECT_NEAR(out(0, 0), 0.75, 1e-15);
  EXPECT_NEAR(out(0, 1), 0.25, 1e-15);
}

TEST(ForwardTest, IdenticalRowsGiveIdenticalOutputs) {
  Rng rng(3);
  const MlpModel model = MlpModel::Initialized({5, 7, 3}, 11);
  Matrix x = RandomMatrix(2, 5, rng);
  for (std::size_t c = 0; c < 5; ++c) x(1, c) = x(0, c);
  const Matrix out = Forward(model, x);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out(0, c), out(1, c));
}

TEST(ForwardTest, RowsSumToOneForRandomLogits) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t in = 1 + rng.Below(6);
    const std::size_t classes = 2 + rng.Below(6);
    MlpModel model = MlpModel::Initialized({in, 1 + rng.Below(8), classes},
                                           rng.Next());
    // Large weights push logits far apart to exercise the stable softmax.
    for (auto& layer : model.layers()) {
      for (double& w : layer.weights.data()) w *= 1.0 + 50.0 * rng.Uniform();
    }
    const Matrix out = Forward(model, RandomMatrix(4, in, rng, 10.0));
    for (std::size_t r = 0; r < out.rows(); ++r) {
      double sum = 0.0;
      for (double p : out.row(r)) {
        EXPECT_GE(p, 0.0);
        sum += p;
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

TEST(ForwardTest, InputWidthMismatchIsShapeError) {
  MlpModel model({3, 2});
  EXPECT_THROW(Forward(model, Matrix(1, 4)), ShapeError);
}

TEST(LossTest, KlToOwnOutputsIsZero) {
  Rng rng(5);
  const MlpModel model = MlpModel::Initialized({3, 6, 4}, 2);
  const Matrix x = RandomMatrix(10, 3, rng);
  const Matrix own = Forward(model, x);
  EXPECT_NEAR(Loss(model, x, own, LossKind::kKlToTargets), 0.0, 1e-9);
}

TEST(LossTest, KlOfOneHotAgainstUniformIsLogTwo) {
  MlpModel model({2, 2});  // outputs [0.5, 0.5]
  const Matrix target(1, 2, std::vector<double>{1.0, 0.0});
  EXPECT_NEAR(Loss(model, Matrix(1, 2), target, LossKind::kKlToTargets),
              std::log(2.0), 1e-12);
}

TEST(LossTest, CrossEntropyOfUniformIsLogClasses) {
  MlpModel model({2, 5});
  const std::vector<int> labels{0, 3, 4};
  EXPECT_NEAR(Loss(model, Matrix(3, 2), labels, LossKind::kCrossEntropy),
              std::log(5.0), 1e-12);
}

TEST(LossTest, KlIsNonNegative) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix p = RandomDistributions(3, 4, rng);
    const Matrix q = RandomDistributions(3, 4, rng);
    EXPECT_GE(MeanKl(p, q), 0.0);
  }
}

TEST(LossTest, RejectsMismatchedTargets) {
  MlpModel model({2, 3});
  const Matrix x(2, 2);
  const std::vector<int> labels{0, 1};
  const Matrix soft(2, 3, 1.0 / 3.0);
  EXPECT_THROW(Loss(model, x, soft, LossKind::kCrossEntropy), ValidationError);
  EXPECT_THROW(Loss(model, x, labels, LossKind::kKlToTargets), ValidationError);
  const std::vector<int> bad_label{0, 3};
  EXPECT_THROW(Loss(model, x, bad_label, LossKind::kCrossEntropy),
               ValidationError);
  const Matrix not_distribution(2, 3, 0.5);
  EXPECT_THROW(Loss(model, x, not_distribution, LossKind::kKlToTargets),
               ValidationError);
  const std::vector<int> short_labels{0};
  EXPECT_ANY_THROW(Loss(model, x, short_labels, LossKind::kCrossEntropy));
}

double Parameter(MlpModel& m, std::size_t layer, std::size_t index,
                 bool bias, double* set = nullptr) {
  double& ref = bias ? m.layers()[layer].biases[index]
                     : m.layers()[layer].weights.data()[index];
  if (set != nullptr) ref = *set;
  return ref;
}

// Max relative error between analytic and central-difference gradients.
// The denominator is floored at 1e-6 so vanishing gradients compare on an
// absolute scale.
double GradientError(const MlpModel& model, const Matrix& x,
                     const Targets& targets, LossKind kind) {
  constexpr double kStep = 1e-5;
  const LossAndGradients analytic =
      ComputeLossAndGradients(model, x, targets, kind);
  MlpModel probe = model;
  double worst = 0.0;
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    for (int bias = 0; bias < 2; ++bias) {
      const std::size_t n = bias ? model.layers()[l].biases.size()
                                 : model.layers()[l].weights.data().size();
      for (std::size_t i = 0; i < n; ++i) {
        const double orig = Parameter(probe, l, i, bias);
        double v = orig + kStep;
        Parameter(probe, l, i, bias, &v);
        const double up = Loss(probe, x, targets, kind);
        v = orig - kStep;
        Parameter(probe, l, i, bias, &v);
        const double down = Loss(probe, x, targets, kind);
        v = orig;
        Parameter(probe, l, i, bias, &v);
        const double numeric = (up - down) / (2.0 * kStep);
        const double a = bias ? analytic.gradients[l].biases[i]
                              : analytic.gradients[l].weights.data()[i];
        const double denom =
            std::max({std::abs(a), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(a - numeric) / denom);
      }
    }
  }
  return worst;
}

TEST(GradientTest, FourEightThreeNetworkSixteenRows) {
  Rng rng(21);
  const MlpModel model = MlpModel::Initialized({4, 8, 3}, 4);
  const Matrix x = RandomMatrix(16, 4, rng);
  std::vector<int> labels(16);
  for (int& y : labels) y = static_cast<int>(rng.Below(3));
  EXPECT_LT(GradientError(model, x, labels, LossKind::kCrossEntropy), 1e-4);
  const Matrix soft = RandomDistributions(16, 3, rng);
  EXPECT_LT(GradientError(model, x, soft, LossKind::kKlToTargets), 1e-4);
}

TEST(GradientTest, RandomNetworksBothLosses) {
  Rng rng(1234);
  int instances = 0;
  for (int trial = 0; trial < 24; ++trial) {
    std::vector<std::size_t> sizes{1 + rng.Below(5)};
    const std::size_t depth = 1 + rng.Below(3);
    for (std::size_t d = 0; d < depth; ++d) sizes.push_back(2 + rng.Below(6));
    sizes.push_back(2 + rng.Below(4));
    MlpModel model = MlpModel::Initialized(sizes, rng.Next());
    // Zero biases can park a unit exactly on the ReLU kink, where central
    // differences disagree with any subgradient.
    for (auto& layer : model.layers()) {
      for (double& b : layer.biases) b = 0.1 * rng.Normal();
    }
    const std::size_t rows = 1 + rng.Below(12);
    const Matrix x = RandomMatrix(rows, sizes.front(), rng);
    std::vector<int> labels(rows);
    for (int& y : labels) {
      y = static_cast<int>(rng.Below(sizes.back()));
    }
    const Matrix soft = RandomDistributions(rows, sizes.back(), rng);
    EXPECT_LT(GradientError(model, x, labels, LossKind::kCrossEntropy), 1e-4)
        << "trial " << trial;
    EXPECT_LT(GradientError(model, x, soft, LossKind::kKlToTargets), 1e-4)
        << "trial " << trial;
    ++instances;
  }
  EXPECT_GE(instances, 20);
}

TEST(TrainTest, ZeroEpochsIsNoOp) {
  Rng rng(2);
  const MlpModel model = MlpModel::Initialized({3, 5, 2}, 9);
  const Matrix x = RandomMatrix(8, 3, rng);
  const std::vector<int> labels{0, 1, 0, 1, 1, 0, 0, 1};
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_EQ(Train(model, x, labels, cfg), model);
}

TEST(TrainTest, SameSeedSameCheckpoint) {
  Rng rng(6);
  const MlpModel model = MlpModel::Initialized({3, 5, 2}, 9);
  const Matrix x = RandomMatrix(40, 3, rng);
  std::vector<int> labels(40);
  for (int& y : labels) y = static_cast<int>(rng.Below(2));
  const TrainConfig cfg{.learning_rate = 0.1, .epochs = 5, .batch_size = 7,
                        .seed = 42};
  EXPECT_EQ(EncodeCheckpoint(Train(model, x, labels, cfg)),
            EncodeCheckpoint(Train(model, x, labels, cfg)));
  TrainConfig other = cfg;
  other.seed = 43;
  EXPECT_NE(EncodeCheckpoint(Train(model, x, labels, cfg)),
            EncodeCheckpoint(Train(model, x, labels, other)));
}

TEST(TrainTest, HooksSeeEveryRowEachEpoch) {
  Rng rng(6);
  const Matrix x = RandomMatrix(23, 2, rng);
  std::vector<int> labels(23, 1);
  std::vector<std::size_t> counts(23, 0);
  TrainHooks hooks;
  hooks.on_batch = [&](std::span<const std::size_t> rows) {
    EXPECT_LE(rows.size(), 5u);
    for (std::size_t r : rows) ++counts[r];
  };
  Train(MlpModel::Initialized({2, 2}, 1), x, labels,
        {.epochs = 3, .batch_size = 5}, &hooks);
  for (std::size_t c : counts) EXPECT_EQ(c, 3u);
}

TEST(TrainTest, StopsEarlyBelowThreshold) {
  const MlpModel model({1, 2});
  const Matrix x(4, 1, 1.0);
  const Matrix own = Forward(model, x);
  int batches = 0;
  TrainHooks hooks;
  hooks.on_batch = [&](std::span<const std::size_t>) { ++batches; };
  const MlpModel out =
      Train(model, x, own,
            {.epochs = 50, .batch_size = 2, .loss = LossKind::kKlToTargets,
             .stop_below = 1e-6},
            &hooks);
  EXPECT_EQ(batches, 0);
  EXPECT_EQ(out, model);
}

TEST(TrainTest, InvalidConfigRejected) {
  const Matrix x(2, 1);
  const std::vector<int> labels{0, 1};
  const MlpModel model({1, 2});
  EXPECT_THROW(Train(model, x, labels, {.learning_rate = 0.0}),
               ValidationError);
  EXPECT_THROW(Train(model, x, labels, {.batch_size = 0}), ValidationError);
  EXPECT_THROW(Train(model, x, labels, {.learning_rate = -1.0}),
               ValidationError);
}

// Independent oracle: batch gradient-descent logistic regression.
double LogisticRegressionAccuracy(const Matrix& x,
                                  const std::vector<int>& labels) {
  double w0 = 0.0, w1 = 0.0, b = 0.0;
  const double n = static_cast<double>(x.rows());
  for (int it = 0; it < 500; ++it) {
    double g0 = 0.0, g1 = 0.0, gb = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double p = 1.0 / (1.0 + std::exp(-(w0 * x(r, 0) + w1 * x(r, 1) + b)));
      const double e = p - labels[r];
      g0 += e * x(r, 0);
      g1 += e * x(r, 1);
      gb += e;
    }
    w0 -= 0.5 * g0 / n;
    w1 -= 0.5 * g1 / n;
    b -= 0.5 * gb / n;
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const int pred = w0 * x(r, 0) + w1 * x(r, 1) + b > 0.0 ? 1 : 0;
    correct += pred == labels[r];
  }
  return static_cast<double>(correct) / n;
}

TEST(TrainTest, TwoClusterToyMatchesLogisticOracle) {
  Rng rng(77);
  Matrix x(200, 2);
  std::vector<int> labels(200);
  for (std::size_t r = 0; r < 200; ++r) {
    labels[r] = static_cast<int>(r % 2);
    const double c = labels[r] == 0 ? -2.0 : 2.0;
    x(r, 0) = c + 0.5 * rng.Normal();
    x(r, 1) = c + 0.5 * rng.Normal();
  }
  const double oracle = LogisticRegressionAccuracy(x, labels);
  ASSERT_GE(oracle, 0.95);
  const MlpModel model =
      Train(MlpModel::Initialized({2, 16, 2}, 5), x, labels,
            {.learning_rate = 0.1, .epochs = 50, .batch_size = 16, .seed = 1});
  const Matrix out = Forward(model, x);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < 200; ++r) {
    correct += (out(r, 1) > out(r, 0) ? 1 : 0) == labels[r];
  }
  EXPECT_GE(correct / 200.0, 0.95);
  EXPECT_GE(correct / 200.0, oracle - 0.02);
}

TEST(InitTest, GlorotBoundsAndZeroBiases) {
  const MlpModel model = MlpModel::Initialized({10, 30, 4}, 3);
  ASSERT_EQ(model.num_parameters(), 10u * 30 + 30 + 30 * 4 + 4);
  const double limit0 = std::sqrt(6.0 / 40.0);
  for (double w : model.layers()[0].weights.data()) {
    EXPECT_LE(std::abs(w), limit0);
  }
  for (double b : model.layers()[1].biases) EXPECT_EQ(b, 0.0);
  EXPECT_EQ(model, MlpModel::Initialized({10, 30, 4}, 3));
  EXPECT_NE(model, MlpModel::Initialized({10, 30, 4}, 4));
}

TEST(CheckpointTest, RoundTripIsBitIdentical) {
  MlpModel model = MlpModel::Initialized({3, 4, 2}, 8);
  model.layers()[0].biases[1] = -0.0;
  model.layers()[1].weights(0, 0) = 1e-310;  // subnormal survives
  const MlpModel back = DecodeCheckpoint(EncodeCheckpoint(model));
  EXPECT_EQ(EncodeCheckpoint(back), EncodeCheckpoint(model));
  EXPECT_EQ(back, model);
  EXPECT_TRUE(std::signbit(back.layers()[0].biases[1]));

  const auto path = std::filesystem::temp_directory_path() / "etid_ckpt_test.ckpt";
  SaveCheckpoint(model, path);
  EXPECT_EQ(LoadCheckpoint(path), model);
  std::filesystem::remove(path);
}

TEST(CheckpointTest, TruncatedIsFormatError) {
  const std::string bytes = EncodeCheckpoint(MlpModel::Initialized({3, 2}, 1));
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{9},
                          bytes.size() - 1}) {
    EXPECT_THROW(DecodeCheckpoint(std::string_view(bytes).substr(0, cut)),
                 FormatError)
        << cut;
  }
  EXPECT_THROW(DecodeCheckpoint(bytes + "x"), FormatError);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(DecodeCheckpoint(bad_magic), FormatError);
}

TEST(CheckpointTest, BumpedVersionIsVersionMismatch) {
  std::string bytes = EncodeCheckpoint(MlpModel::Initialized({3, 2}, 1));
  bytes[4] = static_cast<char>(kCheckpointVersion + 1);
  try {
    DecodeCheckpoint(bytes);
    FAIL() << "expected VersionMismatchError";
  } catch (const VersionMismatchError& e) {
    EXPECT_EQ(e.found(), kCheckpointVersion + 1);
    EXPECT_EQ(e.expected(), kCheckpointVersion);
  }
}

TEST(CheckpointTest, MissingFileIsError) {
  EXPECT_THROW(LoadCheckpoint("/nonexistent/etid.ckpt"), Error);
}

TEST(LossKindTest, NamesRoundTrip) {
  for (LossKind k : {LossKind::kCrossEntropy, LossKind::kKlToTargets}) {
    EXPECT_EQ(ParseLossKind(LossKindName(k)), k);
  }
  EXPECT_THROW(ParseLossKind("mse"), ValidationError);
}

}  // namespace
}  // namespace etid
