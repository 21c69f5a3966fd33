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

#include "data/partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "common/error.hpp"
#include "common/rng.hpp"

namespace fedcmd::data {
namespace {

std::vector<double> dirichlet(Rng& rng, double alpha, int k) {
  std::vector<double> p(static_cast<std::size_t>(k));
  for (;;) {
    double sum = 0.0;
    for (auto& v : p) {
      v = rng.gamma(alpha);
      sum += v;
    }
    if (sum > 0.0 && std::isfinite(sum)) {
      for (auto& v : p) v /= sum;
      return p;
    }
  }
}

// Largest remainder rounding; ties go to the lower index.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& share) {
  std::vector<std::size_t> counts(share.size());
  std::vector<std::pair<double, std::size_t>> remainders(share.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < share.size(); ++i) {
    const double quota = static_cast<double>(total) * share[i];
    counts[i] = static_cast<std::size_t>(std::floor(quota));
    assigned += counts[i];
    remainders[i] = {quota - std::floor(quota), i};
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++counts[remainders[r % remainders.size()].second];
  return counts;
}

PartitionPlan draw_plan(const Dataset& data, double alpha, int num_clients, std::uint64_t draw_seed) {
  PartitionPlan plan;
  plan.alpha = alpha;
  plan.num_clients = num_clients;
  plan.assignment.assign(static_cast<std::size_t>(num_clients), {});
  Rng rng(draw_seed);

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(data.num_classes));
  for (std::size_t i = 0; i < data.size(); ++i) by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

  for (auto& members : by_class) {
    if (members.empty()) continue;
    rng.shuffle(members);
    const auto share = dirichlet(rng, alpha, num_clients);
    const auto counts = apportion(members.size(), share);
    std::size_t cursor = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      auto& dst = plan.assignment[c];
      dst.insert(dst.end(), members.begin() + cursor, members.begin() + cursor + counts[c]);
      cursor += counts[c];
    }
  }
  for (auto& a : plan.assignment) std::sort(a.begin(), a.end());
  return plan;
}

}  // namespace

PartitionPlan dirichlet_partition(const Dataset& data, double alpha, int num_clients, std::uint64_t seed) {
  data.validate();
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorCode::kInvalidArgument, "alpha must be positive");
  if (num_clients < 1) fail(ErrorCode::kInvalidArgument, "num_clients must be at least 1");
  if (data.size() < static_cast<std::size_t>(num_clients) * kMinClientSamples)
    fail(ErrorCode::kState, "dataset of " + std::to_string(data.size()) + " samples cannot give " +
                                std::to_string(num_clients) + " clients " +
                                std::to_string(kMinClientSamples) + " samples each");

  for (int attempt = 0; attempt <= kPartitionRetries; ++attempt) {
    PartitionPlan plan = draw_plan(data, alpha, num_clients, derive_seed(seed, {seed_tag::kData, static_cast<std::uint64_t>(attempt)}));
    plan.seed = seed;
    const bool ok = std::all_of(plan.assignment.begin(), plan.assignment.end(),
                                [](const auto& a) { return a.size() >= kMinClientSamples; });
    if (ok) return plan;
  }
  fail(ErrorCode::kState, "Dirichlet partition left a client with fewer than " +
                              std::to_string(kMinClientSamples) + " samples after " +
                              std::to_string(kPartitionRetries) + " re-draws (alpha=" +
                              std::to_string(alpha) + ", clients=" + std::to_string(num_clients) + ")");
}

void validate_plan(const PartitionPlan& plan, std::size_t dataset_size) {
  if (plan.num_clients < 1 || plan.assignment.size() != static_cast<std::size_t>(plan.num_clients))
    fail(ErrorCode::kInvalidArgument, "plan declares " + std::to_string(plan.num_clients) +
                                          " clients but has " + std::to_string(plan.assignment.size()) +
                                          " assignment lists");
  std::vector<bool> seen(dataset_size, false);
  std::size_t covered = 0;
  for (std::size_t c = 0; c < plan.assignment.size(); ++c) {
    if (plan.assignment[c].size() < kMinClientSamples)
      fail(ErrorCode::kInvalidArgument, "client " + std::to_string(c) + " has fewer than " +
                                            std::to_string(kMinClientSamples) + " samples");
    for (auto i : plan.assignment[c]) {
      if (i >= dataset_size)
        fail(ErrorCode::kInvalidArgument, "plan references sample " + std::to_string(i) +
                                              " but the dataset has " + std::to_string(dataset_size));
      if (seen[i]) fail(ErrorCode::kInvalidArgument, "sample " + std::to_string(i) + " assigned twice");
      seen[i] = true;
      ++covered;
    }
  }
  if (covered != dataset_size)
    fail(ErrorCode::kInvalidArgument, "plan covers " + std::to_string(covered) + " of " +
                                          std::to_string(dataset_size) + " samples");
}

std::string plan_to_json(const PartitionPlan& plan) {
  nlohmann::ordered_json j;
  j["alpha"] = plan.alpha;
  j["num_clients"] = plan.num_clients;
  j["seed"] = plan.seed;
  j["assignment"] = plan.assignment;
  return j.dump() + "\n";
}

PartitionPlan plan_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    PartitionPlan plan;
    plan.alpha = j.at("alpha").get<double>();
    plan.num_clients = j.at("num_clients").get<int>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.assignment = j.at("assignment").get<std::vector<std::vector<std::size_t>>>();
    return plan;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed partition plan: ") + e.what());
  }
}

void save_plan(const PartitionPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << plan_to_json(plan);
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

PartitionPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return plan_from_json(ss.str());
}

std::vector<ClientShard> make_shards(const Dataset& data, const PartitionPlan& plan, std::uint64_t seed) {
  validate_plan(plan, data.size());
  std::vector<ClientShard> shards;
  shards.reserve(plan.assignment.size());
  for (std::size_t c = 0; c < plan.assignment.size(); ++c) {
    std::vector<std::size_t> idx = plan.assignment[c];
    Rng rng(derive_seed(seed, {seed_tag::kSplit, c}));
    rng.shuffle(idx);
    const std::size_t n_train = (idx.size() + 1) / 2;
    ClientShard shard;
    shard.client_id = static_cast<int>(c);
    shard.train_indices.assign(idx.begin(), idx.begin() + n_train);
    shard.test_indices.assign(idx.begin() + n_train, idx.end());
    shard.train = data.subset(shard.train_indices);
    shard.test = data.subset(shard.test_indices);
    shards.push_back(std::move(shard));
  }
  return shards;
}

double mean_label_entropy(const Dataset& data, const PartitionPlan& plan) {
  if (plan.assignment.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& a : plan.assignment) sum += label_entropy(class_histogram(data, a));
  return sum / static_cast<double>(plan.assignment.size());
}

}  // namespace fedcmd::data
