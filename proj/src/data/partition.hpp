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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "data/dataset.hpp"

namespace fedcmd::data {

inline constexpr int kMinClientSamples = 2;
inline constexpr int kPartitionRetries = 16;

struct PartitionPlan {
  double alpha = 0.0;
  int num_clients = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> assignment;  // client id -> sample indices

  bool operator==(const PartitionPlan&) const = default;
};

// For each class, draws p ~ Dir(alpha) over clients and hands out that
// class's (shuffled) samples by largest-remainder rounding of n_c * p.
// If any client ends up with fewer than kMinClientSamples, the whole plan is
// redrawn, at most kPartitionRetries times, before failing with kState.
PartitionPlan dirichlet_partition(const Dataset& data, double alpha, int num_clients,
                                  std::uint64_t seed);

// Disjointness, coverage of every index in [0, dataset_size) and minimum
// shard size. Throws kInvalidArgument.
void validate_plan(const PartitionPlan& plan, std::size_t dataset_size);

// {"alpha":..,"num_clients":..,"seed":..,"assignment":[[..],..]}
std::string plan_to_json(const PartitionPlan& plan);
PartitionPlan plan_from_json(const std::string& text);
void save_plan(const PartitionPlan& plan, const std::filesystem::path& path);
PartitionPlan load_plan(const std::filesystem::path& path);

struct ClientShard {
  int client_id = 0;
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;  // into the source dataset
  std::vector<std::size_t> test_indices;
};

// Shuffles each client's samples and splits them evenly; with an odd count
// the training side gets the extra sample.
std::vector<ClientShard> make_shards(const Dataset& data, const PartitionPlan& plan,
                                     std::uint64_t seed);

// Mean over clients of the label entropy of their assignment.
double mean_label_entropy(const Dataset& data, const PartitionPlan& plan);

}  // namespace fedcmd::data
