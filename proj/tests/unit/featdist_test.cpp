// Copyright 2026 The FedCMD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "data/dataset.hpp"
#include "featdist/gaussian.hpp"
#include "featdist/layer_scores.hpp"
#include "nn/architectures.hpp"
#include "oracles.hpp"

namespace fedcmd::featdist {
namespace {

GaussianSummary g(double m, double s) { return {m, s}; }

TEST(FitGaussianTest, Examples) {
  const std::vector<double> constant{1, 1, 1, 1};
  const auto c = fit_gaussian(constant);
  EXPECT_EQ(c.mean, 1.0);
  EXPECT_EQ(c.std, kSigmaMin);
  const std::vector<double> two{0, 2};
  const auto t = fit_gaussian(two);
  EXPECT_DOUBLE_EQ(t.mean, 1.0);
  EXPECT_DOUBLE_EQ(t.std, 1.0);
  Rng r(17);
  std::vector<double> draws(100000);
  for (auto& v : draws) v = r.normal(3.0, 2.0);
  const auto n = fit_gaussian(draws);
  EXPECT_NEAR(n.mean, 3.0, 0.05);
  EXPECT_NEAR(n.std, 2.0, 0.05);
}

TEST(FitGaussianTest, Errors) {
  EXPECT_THROW(fit_gaussian(std::vector<double>{}), Error);
  const std::vector<double> bad{1.0, NAN, INFINITY};
  try {
    fit_gaussian(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos) << e.what();
  }
}

TEST(FitGaussianTest, MergeMatchesSinglePass) {
  Rng r(2);
  GaussianAccumulator all, a, b;
  for (int i = 0; i < 1000; ++i) {
    const double v = r.normal(1.0, 3.0);
    all.add(v);
    (i % 3 ? a : b).add(v);
  }
  a.merge(b);
  EXPECT_NEAR(a.summary().mean, all.summary().mean, 1e-12);
  EXPECT_NEAR(a.summary().std, all.summary().std, 1e-12);
}

TEST(W2Test, Examples) {
  EXPECT_EQ(w2_gaussian(g(0, 1), g(0, 1)), 0.0);
  EXPECT_DOUBLE_EQ(w2_gaussian(g(3, 1), g(0, 1)), 3.0);
  EXPECT_DOUBLE_EQ(w2_gaussian(g(1, 2), g(4, 6)), 5.0);
  EXPECT_NEAR(oracle::w2_quantile_integral(g(1, 2), g(4, 6)), 5.0, 1e-4);
}

TEST(W2Test, MetricProperties) {
  Rng r(5);
  auto rand_g = [&] { return g(r.uniform(-10, 10), r.uniform(0.1, 10)); };
  for (int i = 0; i < 500; ++i) {
    const auto a = rand_g(), b = rand_g(), c = rand_g();
    EXPECT_GE(w2_gaussian(a, b), 0.0);
    EXPECT_DOUBLE_EQ(w2_gaussian(a, b), w2_gaussian(b, a));
    EXPECT_LE(w2_gaussian(a, c), w2_gaussian(a, b) + w2_gaussian(b, c) + 1e-12);
    EXPECT_EQ(w2_gaussian(a, a), 0.0);
  }
}

TEST(TransferScoreTest, Examples) {
  EXPECT_EQ(transfer_score(g(1, 2), g(1, 2), g(0, 1), g(4, 1)), 0.0);
  EXPECT_EQ(transfer_score(g(0, 1), g(5, 1), g(0, 1), g(0, 1)), 0.0);
  EXPECT_DOUBLE_EQ(transfer_score(g(0, 1), g(2, 1), g(0, 1), g(4, 1)), 4.0);
  // Same value through the quantile oracle.
  auto w = [](GaussianSummary a, GaussianSummary b) { return oracle::w2_quantile_integral(a, b); };
  const double oracle_score = std::abs((w(g(2, 1), g(4, 1)) - w(g(2, 1), g(0, 1))) - (w(g(0, 1), g(4, 1)) - w(g(0, 1), g(0, 1))));
  EXPECT_NEAR(oracle_score, 4.0, 1e-4);
}

TEST(TransferScoreTest, SwappingXAndYLeavesScoreUnchanged) {
  Rng r(8);
  for (int i = 0; i < 200; ++i) {
    const auto p = g(r.uniform(-3, 3), r.uniform(0.1, 3)), c = g(r.uniform(-3, 3), r.uniform(0.1, 3));
    const auto x = g(r.uniform(-3, 3), r.uniform(0.1, 3)), y = g(r.uniform(-3, 3), r.uniform(0.1, 3));
    EXPECT_NEAR(transfer_score(p, c, x, y), transfer_score(p, c, y, x), 1e-12);
    EXPECT_GE(transfer_score(p, c, x, y), 0.0);
  }
}

TEST(LabelSummaryTest, Encodings) {
  const std::vector<std::int32_t> labels{0, 1, 2, 3};
  const auto onehot = fit_labels(labels, 4, LabelEncoding::kOneHot);
  EXPECT_DOUBLE_EQ(onehot.mean, 0.25);
  EXPECT_NEAR(onehot.std, std::sqrt(0.25 * 0.75), 1e-12);
  const auto index = fit_labels(labels, 4, LabelEncoding::kIndex);
  EXPECT_DOUBLE_EQ(index.mean, 1.5);
  EXPECT_NEAR(index.std, std::sqrt(1.25), 1e-12);
}

TEST(EligibilityTest, ConvAndDenseOnlyAndBlockOutputs) {
  const auto spec = nn::lenet5({3, 32, 32}, 10);
  const auto e = eligible_layers(spec);
  EXPECT_EQ(e, (std::vector<std::string>{"conv1", "conv2", "fc1", "fc2", "classifier"}));
  const auto blocks = block_outputs(spec, e);
  auto name = [&](std::size_t i) { return spec.layers[i].name; };
  EXPECT_EQ(name(blocks[0]), "conv1.relu");
  EXPECT_EQ(name(blocks[1]), "flatten");
  EXPECT_EQ(name(blocks[2]), "fc1.relu");
  EXPECT_EQ(name(blocks[4]), "classifier");
}

nn::Model identity_stack(int width, int depth) {
  nn::ModelSpec spec{{width}, {}};
  for (int l = 0; l < depth; ++l) spec.layers.push_back(nn::dense(l + 1 == depth ? "classifier" : "fc" + std::to_string(l + 1), width));
  auto m = nn::build_model(spec, 1);
  auto p = m.params();
  for (auto& layer : p) {
    std::fill(layer.begin(), layer.end(), 0.0f);
    for (int i = 0; i < width; ++i) layer[static_cast<std::size_t>(i) * width + i] = 1.0f;
  }
  m.set_params(p);
  return m;
}

data::Dataset sample_data(int dim, int classes, int per_class, std::uint64_t seed) {
  data::SyntheticOptions o;
  o.num_classes = classes;
  o.samples_per_class = per_class;
  o.input_shape = {dim};
  o.seed = seed;
  return data::generate_synthetic(o);
}

TEST(ScoreAllLayersTest, IdentityLayersScoreZero) {
  const auto m = identity_stack(4, 3);
  const auto d = sample_data(4, 4, 20, 1);
  const auto zx = fit_inputs(d.view());
  const auto zy = fit_labels(d.labels, 4, LabelEncoding::kOneHot);
  const auto scores = score_all_layers(m, d.view(), zx, zy, eligible_layers(m.spec()));
  ASSERT_EQ(scores.size(), 3u);
  for (const auto& s : scores) EXPECT_NEAR(s.score, 0.0, 1e-9) << s.layer;
}

TEST(ScoreAllLayersTest, SingleEligibleLayerAndEmptyList) {
  const auto m = nn::build_model(nn::mlp({4}, {3}, 2), 2);
  const auto d = sample_data(4, 2, 10, 1);
  const auto zx = fit_inputs(d.view());
  const auto zy = fit_labels(d.labels, 2, LabelEncoding::kOneHot);
  EXPECT_EQ(score_all_layers(m, d.view(), zx, zy, {"fc1"}).size(), 1u);
  EXPECT_THROW(score_all_layers(m, d.view(), zx, zy, {}), Error);
}

TEST(ScoreAllLayersTest, StreamingMatchesMaterializedTwoPass) {
  const auto m = nn::build_model(nn::mlp({6}, {8, 5}, 3), 4);
  const auto d = sample_data(6, 3, 70, 3);
  const auto zx = fit_inputs(d.view());
  const auto zy = fit_labels(d.labels, 3, LabelEncoding::kOneHot);
  const auto eligible = eligible_layers(m.spec());
  // Small batches so several streaming updates happen.
  const auto streamed = score_all_layers(m, d.view(), zx, zy, eligible, 16);

  // Oracle: whole dataset in one forward, two-pass mean/std per block.
  nn::Tensor<float> x(static_cast<int>(d.size()), d.sample_shape);
  x.data = d.inputs;
  const auto trace = nn::forward(m, x).trace;
  const auto blocks = block_outputs(m.spec(), eligible);
  auto two_pass = [](const std::vector<float>& v) {
    double s = 0;
    for (float f : v) s += f;
    const double mean = s / v.size();
    double q = 0;
    for (float f : v) q += (f - mean) * (f - mean);
    return GaussianSummary{mean, std::max(std::sqrt(q / v.size()), kSigmaMin)};
  };
  GaussianSummary prev = zx;
  ASSERT_EQ(streamed.size(), eligible.size());
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    const auto cur = two_pass(trace.outputs[blocks[i]].data);
    const double expected = std::abs((w2_gaussian(cur, zy) - w2_gaussian(cur, zx)) - (w2_gaussian(prev, zy) - w2_gaussian(prev, zx)));
    EXPECT_NEAR(streamed[i].score, expected, 1e-6) << eligible[i];
    prev = cur;
  }
}

}  // namespace
}  // namespace fedcmd::featdist
