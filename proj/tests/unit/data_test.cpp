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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "common/error.hpp"
#include "data/dataset.hpp"
#include "data/idx.hpp"
#include "data/partition.hpp"
#include "nn/model.hpp"

namespace fedcmd::data {
namespace {

namespace fs = std::filesystem;

Dataset blobs(int classes, int per_class, std::uint64_t seed, double sep = 4.0, nn::Shape shape = {20}) {
  SyntheticOptions o;
  o.num_classes = classes;
  o.samples_per_class = per_class;
  o.input_shape = shape;
  o.class_separation = sep;
  o.seed = seed;
  return generate_synthetic(o);
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("fedcmd_data_test_" + name); }

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> be32(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8),
          static_cast<std::uint8_t>(v)};
}

TEST(SyntheticTest, SizeBalanceAndDeterminism) {
  const auto d = blobs(4, 30, 1);
  EXPECT_EQ(d.size(), 120u);
  std::vector<std::size_t> all(d.size());
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(class_histogram(d, all), (std::vector<std::size_t>{30, 30, 30, 30}));
  EXPECT_EQ(d, blobs(4, 30, 1));
  EXPECT_NE(d, blobs(4, 30, 2));
  d.validate();
}

TEST(SyntheticTest, ClassMeansAreSeparationApart) {
  const auto d = blobs(3, 4000, 5, 6.0, {10});
  std::vector<std::vector<double>> mean(3, std::vector<double>(10, 0.0));
  for (std::size_t i = 0; i < d.size(); ++i)
    for (int k = 0; k < 10; ++k) mean[d.labels[i]][k] += d.inputs[i * 10 + k] / 4000.0;
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      double s = 0;
      for (int k = 0; k < 10; ++k) s += (mean[a][k] - mean[b][k]) * (mean[a][k] - mean[b][k]);
      EXPECT_NEAR(std::sqrt(s), 6.0, 0.15);
    }
}

TEST(SyntheticTest, WellSeparatedTwoClassesAreLinearlySeparable) {
  const auto d = blobs(2, 200, 3, 10.0, {2});
  auto m = nn::build_model({{2}, {nn::dense("classifier", 2)}}, 1);
  for (int e = 0; e < 20; ++e) m = nn::sgd_epoch(std::move(m), d.view(), {0.01, 32, static_cast<std::uint64_t>(e)}).model;
  nn::Tensor<float> x(static_cast<int>(d.size()), {2});
  x.data = d.inputs;
  const auto logits = nn::forward(m, x).logits;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < d.size(); ++i) hit += (logits.data[2 * i + 1] > logits.data[2 * i]) == (d.labels[i] == 1);
  EXPECT_GE(static_cast<double>(hit) / d.size(), 0.99);
}

TEST(IdxTest, RoundTripIsExact) {
  Dataset d;
  d.sample_shape = {1, 3, 2};
  d.num_classes = 4;
  for (int i = 0; i < 5; ++i) {
    for (int k = 0; k < 6; ++k) d.inputs.push_back(static_cast<float>((i * 37 + k * 11) % 256) / 255.0f);
    d.labels.push_back(i % 4);
  }
  const auto img = temp_path("img"), lab = temp_path("lab");
  write_idx(d, img, lab);
  const auto back = load_idx(img, lab);
  EXPECT_EQ(back, d);
  fs::remove(img);
  fs::remove(lab);
}

TEST(IdxTest, ErrorVariants) {
  const auto img = temp_path("img2"), lab = temp_path("lab2");
  auto header = [](std::uint32_t magic, std::uint32_t n) {
    auto b = be32(magic);
    auto c = be32(n);
    b.insert(b.end(), c.begin(), c.end());
    return b;
  };
  auto images = header(kIdxImagesMagic, 2);
  for (auto v : be32(2)) images.push_back(v);
  for (auto v : be32(2)) images.push_back(v);
  images.insert(images.end(), 8, 100);
  auto labels = header(kIdxLabelsMagic, 2);
  labels.push_back(0);
  labels.push_back(1);
  write_bytes(img, images);
  write_bytes(lab, labels);
  EXPECT_EQ(load_idx(img, lab).size(), 2u);

  auto code_of = [&] {
    try {
      load_idx(img, lab);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kState;
  };
  write_bytes(lab, header(kIdxLabelsMagic, 3));
  EXPECT_EQ(code_of(), ErrorCode::kCountMismatch);

  auto bad = images;
  bad[3] = 0x09;
  write_bytes(img, bad);
  write_bytes(lab, labels);
  try {
    load_idx(img, lab);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
    EXPECT_NE(std::string(e.what()).find(img.string()), std::string::npos) << e.what();
  }

  auto cut = images;
  cut.resize(cut.size() - 3);
  write_bytes(img, cut);
  EXPECT_EQ(code_of(), ErrorCode::kTruncated);

  fs::remove(img);
  EXPECT_EQ(code_of(), ErrorCode::kIo);
  fs::remove(lab);
}

void expect_valid(const PartitionPlan& plan, const Dataset& d) {
  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (const auto& a : plan.assignment) {
    EXPECT_GE(a.size(), static_cast<std::size_t>(kMinClientSamples));
    total += a.size();
    seen.insert(a.begin(), a.end());
  }
  EXPECT_EQ(total, d.size());
  EXPECT_EQ(seen.size(), d.size());
}

TEST(PartitionTest, ConservationAndDeterminism) {
  const auto d = blobs(10, 100, 1);
  for (double alpha : {0.1, 0.5, 1.0}) {
    const auto p = dirichlet_partition(d, alpha, 20, 4);
    expect_valid(p, d);
    validate_plan(p, d.size());
    EXPECT_EQ(p, dirichlet_partition(d, alpha, 20, 4));
    EXPECT_EQ(plan_to_json(p), plan_to_json(dirichlet_partition(d, alpha, 20, 4)));
  }
}

TEST(PartitionTest, SingleClientTakesEverything) {
  const auto d = blobs(3, 10, 1);
  const auto p = dirichlet_partition(d, 0.1, 1, 1);
  ASSERT_EQ(p.assignment.size(), 1u);
  EXPECT_EQ(p.assignment[0].size(), d.size());
}

TEST(PartitionTest, HugeAlphaIsNearUniform) {
  const auto d = blobs(10, 100, 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = dirichlet_partition(d, 1e6, 10, seed);
    for (const auto& a : p.assignment) {
      const auto h = class_histogram(d, a);
      const double max_share = static_cast<double>(*std::max_element(h.begin(), h.end())) / a.size();
      EXPECT_LE(max_share, 0.2);
    }
  }
}

TEST(PartitionTest, EntropyIsMonotoneInAlpha) {
  const auto d = blobs(10, 100, 1);
  std::vector<double> means;
  for (double alpha : {0.1, 0.5, 1.0, 1e6}) {
    double s = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) s += mean_label_entropy(d, dirichlet_partition(d, alpha, 20, seed));
    means.push_back(s / 20);
  }
  for (std::size_t i = 1; i < means.size(); ++i) EXPECT_GT(means[i], means[i - 1]) << i;
}

TEST(PartitionTest, ImpossiblePlanFailsAfterRetries) {
  const auto d = blobs(2, 3, 1);
  EXPECT_THROW(dirichlet_partition(d, 0.1, 5, 1), Error);
}

TEST(PartitionTest, JsonRoundTripAndFile) {
  const auto d = blobs(5, 20, 2);
  const auto p = dirichlet_partition(d, 0.5, 6, 9);
  EXPECT_EQ(plan_from_json(plan_to_json(p)), p);
  const auto path = temp_path("plan.json");
  save_plan(p, path);
  EXPECT_EQ(load_plan(path), p);
  fs::remove(path);
  EXPECT_THROW(plan_from_json("{\"alpha\": 1}"), Error);
  auto broken = p;
  broken.assignment[0].push_back(broken.assignment[1].front());
  EXPECT_THROW(validate_plan(broken, d.size()), Error);
}

TEST(ShardTest, EvenSplitsAndConservation) {
  const auto d = blobs(5, 20, 2);
  PartitionPlan plan;
  plan.alpha = 1.0;
  plan.num_clients = 3;
  plan.assignment = {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {10, 11, 12}, {}};
  for (std::size_t i = 13; i < d.size(); ++i) plan.assignment[2].push_back(i);
  const auto shards = make_shards(d, plan, 5);
  ASSERT_EQ(shards.size(), 3u);
  EXPECT_EQ(shards[0].train.size(), 5u);
  EXPECT_EQ(shards[0].test.size(), 5u);
  EXPECT_EQ(shards[1].train.size(), 2u);
  EXPECT_EQ(shards[1].test.size(), 1u);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<std::size_t> all = shards[c].train_indices;
    all.insert(all.end(), shards[c].test_indices.begin(), shards[c].test_indices.end());
    std::sort(all.begin(), all.end());
    auto expected = plan.assignment[c];
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(all, expected);
    for (std::size_t k = 0; k < shards[c].train.size(); ++k)
      EXPECT_EQ(shards[c].train.labels[k], d.labels[shards[c].train_indices[k]]);
  }
  const auto again = make_shards(d, plan, 5);
  EXPECT_EQ(again[2].train_indices, shards[2].train_indices);
}

TEST(EntropyTest, Values) {
  EXPECT_DOUBLE_EQ(label_entropy(std::vector<std::size_t>{}), 0.0);
  EXPECT_DOUBLE_EQ(label_entropy(std::vector<std::size_t>{5, 0}), 0.0);
  EXPECT_NEAR(label_entropy(std::vector<std::size_t>{3, 3}), std::log(2.0), 1e-12);
}

}  // namespace
}  // namespace fedcmd::data
