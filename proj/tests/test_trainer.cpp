/*
 * Copyright 2026 The TransBoost Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "transboost/eval.hpp"
#include "transboost/trainer.hpp"

using namespace transboost;

namespace {

Dataset small_blobs(std::uint64_t seed, double scale = 3.0) {
  BlobsSpec spec;
  spec.classes = 2;
  spec.per_class = 100;
  spec.dim = 4;
  spec.center_scale = scale;
  spec.noise_sigma = 0.5;
  spec.seed = seed;
  return gen_blobs(spec);
}

TrainConfig quick(std::size_t epochs) {
  TrainConfig t;
  t.epochs = epochs;
  t.labeled_batch = 16;
  t.unlabeled_batch = 16;
  t.lr = 0.05;
  return t;
}

GradientSet constant_grad(const Parameters& p, double v) {
  GradientSet g = GradientSet::zeros_like(p);
  for (auto& b : g.blocks) std::fill(b.begin(), b.end(), v);
  return g;
}

}  // namespace

TEST(Sgd, PlainStepWithoutMomentumOrDecay) {
  Rng rng(1);
  Parameters p = glorot_init(Arch::Linear, {3, 0, 2}, rng);
  const Parameters before = p;
  auto state = OptimizerState::zeros_like(p);
  TrainConfig cfg;
  cfg.momentum = 0.0;
  cfg.weight_decay = 0.0;
  cfg.lr = 0.1;
  sgd_step(p, constant_grad(p, 2.0), state, cfg);
  for (std::size_t b = 0; b < p.weights.size(); ++b)
    for (std::size_t i = 0; i < p.weights[b].size(); ++i) EXPECT_DOUBLE_EQ(p.weights[b][i], before.weights[b][i] - 0.2);
}

TEST(Sgd, ZeroLearningRateStillUpdatesVelocity) {
  Rng rng(2);
  Parameters p = glorot_init(Arch::Linear, {3, 0, 2}, rng);
  const Parameters before = p;
  auto state = OptimizerState::zeros_like(p);
  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.weight_decay = 0.0;
  sgd_step(p, constant_grad(p, 1.5), state, cfg);
  EXPECT_EQ(p, before);
  for (const auto& v : state.velocity)
    for (double x : v) EXPECT_DOUBLE_EQ(x, 1.5);
}

TEST(Sgd, NesterovAndWeightDecayArithmetic) {
  auto p = Parameters::zeros(Arch::Linear, {1, 0, 2});
  p.weights[0] = {1.0, -2.0};
  auto state = OptimizerState::zeros_like(p);
  state.velocity[0] = {0.5, 0.0};
  TrainConfig cfg;
  cfg.lr = 0.1;
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.01;
  GradientSet g = GradientSet::zeros_like(p);
  g.blocks[0] = {0.2, 0.4};
  sgd_step(p, g, state, cfg);
  const double g0 = 0.2 + 0.01 * 1.0, v0 = 0.9 * 0.5 + g0;
  EXPECT_DOUBLE_EQ(state.velocity[0][0], v0);
  EXPECT_DOUBLE_EQ(p.weights[0][0], 1.0 - 0.1 * (g0 + 0.9 * v0));
  cfg.nesterov = false;
  const double w1 = p.weights[0][1], v1 = state.velocity[0][1];
  sgd_step(p, g, state, cfg);
  const double g1 = 0.4 + 0.01 * w1;
  EXPECT_DOUBLE_EQ(p.weights[0][1], w1 - 0.1 * (0.9 * v1 + g1));
}

TEST(Sgd, NonFiniteUpdateLeavesParametersUntouched) {
  auto p = Parameters::zeros(Arch::Linear, {2, 0, 2});
  const Parameters before = p;
  auto state = OptimizerState::zeros_like(p);
  auto g = GradientSet::zeros_like(p);
  g.blocks[1][1] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(sgd_step(p, g, state, TrainConfig{}), NumericError);
  EXPECT_EQ(p, before);
}

TEST(Batching, StepCountAndWrapping) {
  const auto batches = cyclical_batches(1000, 100, 50, 50, 7);
  ASSERT_EQ(batches.size(), 20u);
  std::vector<int> labeled_seen(1000, 0), unlabeled_seen(100, 0);
  for (const auto& b : batches) {
    EXPECT_EQ(b.labeled.size(), 50u);
    EXPECT_EQ(b.unlabeled.size(), 50u);
    for (auto i : b.labeled) ++labeled_seen[i];
    for (auto i : b.unlabeled) ++unlabeled_seen[i];
  }
  for (int c : labeled_seen) EXPECT_EQ(c, 1);
  for (int c : unlabeled_seen) EXPECT_EQ(c, 10);
}

TEST(Batching, EqualSizesGiveDisjointBatches) {
  const auto batches = cyclical_batches(96, 96, 32, 32, 3);
  ASSERT_EQ(batches.size(), 3u);
  std::set<std::size_t> l, u;
  for (const auto& b : batches) {
    l.insert(b.labeled.begin(), b.labeled.end());
    u.insert(b.unlabeled.begin(), b.unlabeled.end());
  }
  EXPECT_EQ(l.size(), 96u);
  EXPECT_EQ(u.size(), 96u);
}

TEST(Batching, PartialLastChunkAndDeterminism) {
  const auto a = cyclical_batches(10, 25, 4, 8, 11, 3);
  const auto b = cyclical_batches(10, 25, 4, 8, 11, 3);
  ASSERT_EQ(a.size(), 12u);
  for (std::size_t s = 0; s < a.size(); ++s) {
    EXPECT_EQ(a[s].labeled, b[s].labeled);
    EXPECT_EQ(a[s].unlabeled, b[s].unlabeled);
  }
  EXPECT_EQ(a[3].unlabeled.size(), 1u);
  const auto c = cyclical_batches(10, 25, 4, 8, 12, 3);
  EXPECT_NE(a[0].labeled, c[0].labeled);
}

TEST(Pretrain, SeparableBlobsReachHighAccuracy) {
  const Dataset d = small_blobs(5);
  TrainConfig cfg = quick(100);
  const auto p = pretrain(d, {Arch::Linear, 0}, cfg);
  EXPECT_GE(top1(p, d.features, *d.labels), 0.95);
}

TEST(Pretrain, MlpFitsRings) {
  RingsSpec spec;
  spec.per_class = 100;
  spec.noise_sigma = 0.05;
  spec.seed = 4;
  const Dataset d = gen_rings(spec);
  TrainConfig cfg = quick(200);
  const auto p = pretrain(d, {Arch::Mlp1, 16}, cfg);
  EXPECT_GE(top1(p, d.features, *d.labels), 0.95);
}

TEST(Pretrain, ZeroLearningRateKeepsInitialization) {
  const Dataset d = small_blobs(6);
  TrainConfig cfg = quick(1);
  cfg.lr = 0.0;
  const auto p = pretrain(d, {Arch::Linear, 0}, cfg);
  Rng init(cfg.seed, Stream::Init);
  EXPECT_EQ(p, glorot_init(Arch::Linear, {4, 0, 2}, init));
}

TEST(Pretrain, DeterministicAndLogsEveryEpoch) {
  const Dataset d = small_blobs(7);
  std::vector<EpochRecord> records;
  const auto a = pretrain(d, {Arch::Mlp1, 8}, quick(5), [&](const EpochRecord& r) { records.push_back(r); });
  const auto b = pretrain(d, {Arch::Mlp1, 8}, quick(5));
  EXPECT_EQ(a, b);
  ASSERT_EQ(records.size(), 5u);
  EXPECT_EQ(records.back().epoch, 5u);
  EXPECT_LT(records.back().cross_entropy, records.front().cross_entropy);
}

TEST(Pretrain, RejectsUnlabeledData) {
  Dataset d = small_blobs(8);
  d.labels.reset();
  EXPECT_THROW(pretrain(d, {Arch::Linear, 0}, quick(1)), InputError);
}

TEST(Snapshot, MatchesPerInstanceRecompute) {
  const Dataset d = small_blobs(9, 1.0);
  const auto p = pretrain(d, {Arch::Mlp1, 6}, quick(3));
  const auto snap = build_snapshot(p, d.features);
  ASSERT_EQ(snap.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto row = d.features.row(i);
    const auto probs = oracle::softmax(oracle::logits(p, {row.begin(), row.end()}));
    const auto best = std::max_element(probs.begin(), probs.end());
    EXPECT_EQ(snap.pseudo_labels()[i], static_cast<std::size_t>(best - probs.begin()));
    EXPECT_NEAR(snap.confidences()[i], *best, 1e-12);
  }
}

TEST(Snapshot, UniformModelGivesConfidenceOneOverC) {
  const auto p = Parameters::zeros(Arch::Linear, {2, 0, 4});
  const auto snap = build_snapshot(p, Matrix(3, 2, 1.0));
  for (double c : snap.confidences()) EXPECT_DOUBLE_EQ(c, 0.25);
}

class FinetuneFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    d_ = small_blobs(10, 1.0);
    SplitSpec spec;
    spec.train_fraction = 0.5;
    spec.seed = 1;
    split_ = transductive_split(d_, spec);
    theta0_ = pretrain(split_.labeled, {Arch::Linear, 0}, quick(10));
    cfg_ = quick(3);
  }
  Dataset d_;
  TransductiveSplit split_;
  Parameters theta0_;
  TrainConfig cfg_;
};

TEST_F(FinetuneFixture, LambdaZeroMatchesCrossEntropyOnly) {
  TrainConfig cfg = cfg_;
  cfg.loss.lambda = 0.0;
  const auto ce = ce_finetune(theta0_, split_.labeled, split_.unlabeled, cfg);
  EXPECT_EQ(transboost_finetune(theta0_, split_.labeled, split_.unlabeled, cfg), ce);
  EXPECT_EQ(entmin_finetune(theta0_, split_.labeled, split_.unlabeled, cfg), ce);
  for (Variant v : {Variant::Attract, Variant::Both}) {
    cfg.loss.variant = v;
    EXPECT_EQ(transboost_finetune(theta0_, split_.labeled, split_.unlabeled, cfg), ce);
  }
}

TEST_F(FinetuneFixture, ZeroEpochsReturnsTheta0) {
  TrainConfig cfg = cfg_;
  cfg.epochs = 0;
  EXPECT_EQ(transboost_finetune(theta0_, split_.labeled, split_.unlabeled, cfg), theta0_);
}

TEST_F(FinetuneFixture, DeterministicAndDifferentFromCe) {
  const auto a = transboost_finetune(theta0_, split_.labeled, split_.unlabeled, cfg_);
  const auto b = transboost_finetune(theta0_, split_.labeled, split_.unlabeled, cfg_);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, ce_finetune(theta0_, split_.labeled, split_.unlabeled, cfg_));
}

TEST_F(FinetuneFixture, SingleUnlabeledInstanceDegradesToCe) {
  const std::vector<std::size_t> one{0};
  const Matrix u = split_.unlabeled.select_rows(one);
  EXPECT_EQ(transboost_finetune(theta0_, split_.labeled, u, cfg_), ce_finetune(theta0_, split_.labeled, u, cfg_));
}

TEST_F(FinetuneFixture, SnapshotSizeMismatchIsShapeError) {
  const Snapshot wrong({0}, {1.0}, "t", 2);
  EXPECT_THROW(transboost_finetune(theta0_, split_.labeled, split_.unlabeled, wrong, cfg_), ShapeError);
}

TEST_F(FinetuneFixture, TransductiveTermDecreases) {
  TrainConfig cfg = cfg_;
  cfg.epochs = 30;
  cfg.lr = 0.05;
  std::vector<EpochRecord> records;
  transboost_finetune(theta0_, split_.labeled, split_.unlabeled, cfg, [&](const EpochRecord& r) { records.push_back(r); });
  ASSERT_EQ(records.size(), 30u);
  EXPECT_LT(records.back().transductive, records.front().transductive);
}

TEST(Finetune, OneStepClosedFormSoftmaxRegression) {
  auto theta0 = Parameters::zeros(Arch::Linear, {2, 0, 3});
  theta0.weights[0] = {0.1, -0.2, 0.3, 0.0, -0.1, 0.4};
  Dataset labeled{Matrix(1, 2, std::vector<double>{1.0, 2.0}), std::vector<std::size_t>{1}, 3, "one"};
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.lr = 0.5;
  cfg.momentum = 0.0;
  cfg.weight_decay = 0.0;
  cfg.loss.lambda = 0.0;
  const auto theta = ce_finetune(theta0, labeled, Matrix(), cfg);
  const std::vector<double> x{1.0, 2.0};
  const auto p = oracle::softmax(oracle::logits(theta0, x));
  for (std::size_t k = 0; k < 3; ++k) {
    const double r = p[k] - (k == 1 ? 1.0 : 0.0);
    EXPECT_NEAR(theta.weights[1][k], -0.5 * r, 1e-11);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(theta.weights[0][k * 2 + j], theta0.weights[0][k * 2 + j] - 0.5 * r * x[j], 1e-11);
  }
}

TEST(Finetune, UniformModelEntropyTermIsLogC) {
  const auto p = Parameters::zeros(Arch::Linear, {2, 0, 4});
  BatchObjective obj;
  const std::vector<double> x{0.3, 0.1};
  obj.labeled_x = {x};
  obj.labels = {0};
  obj.unlabeled_x = {x, x, x};
  obj.term = TransductiveTerm::Entropy;
  EXPECT_NEAR(objective_value(p, obj).transductive, std::log(4.0), 1e-10);
}

TEST(TrainConfig, Validation) {
  TrainConfig t;
  t.labeled_batch = 0;
  EXPECT_THROW(t.validate(), InputError);
  t = TrainConfig{};
  t.momentum = 1.0;
  EXPECT_THROW(t.validate(), InputError);
  t = TrainConfig{};
  t.epochs = 0;
  EXPECT_NO_THROW(t.validate());
}
