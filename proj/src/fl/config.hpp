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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "featdist/layer_scores.hpp"

namespace fedcmd::fl {

enum class Strategy { kFedCmd, kFedAvg, kLocalOnly, kFixedHead };

// How body layers are combined once l* is fixed.
enum class SplitMode {
  kBeforeAfter,  // layers before l*: FedAvg; layers after l*: similarity-weighted
  kWholeBody,    // every body layer similarity-weighted
};

std::string_view to_string(Strategy s);
std::string_view to_string(SplitMode m);
std::string_view to_string(featdist::LabelEncoding e);
Strategy parse_strategy(std::string_view s);
SplitMode parse_split_mode(std::string_view s);
featdist::LabelEncoding parse_label_encoding(std::string_view s);

// ceil(gamma * num_clients), at least 1.
int clients_per_round(double gamma, int num_clients);

struct RunConfig {
  Strategy strategy = Strategy::kFedCmd;
  int rounds = 200;          // K
  double rho = 0.1;          // K_p = round(rho * K)
  double join_ratio = 0.1;   // gamma
  int local_epochs = 5;      // E
  int batch_size = 32;
  double lr = 0.01;
  int num_clients = 100;
  double alpha = 0.1;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> data_seed;      // derived from seed when unset
  std::optional<std::uint64_t> sampling_seed;  // derived from seed when unset
  std::string model = "mlp";
  std::vector<int> hidden = {64, 32};  // mlp only
  SplitMode split_mode = SplitMode::kBeforeAfter;
  double epsilon = 1e-8;
  featdist::LabelEncoding label_encoding = featdist::LabelEncoding::kOneHot;
  int eval_every = 5;
  int checkpoint_every = 0;  // 0 disables
  bool dump_similarity = false;

  // Throws kConfig naming the offending field.
  void validate() const;

  // K_p for fedcmd, 0 for every other strategy.
  int selection_rounds() const;
  // |C^k| = ceil(gamma * N).
  int clients_per_round() const;

  std::uint64_t resolved_data_seed() const;
  std::uint64_t resolved_sampling_seed() const;
  std::uint64_t init_seed() const;
  std::uint64_t client_seed(int client_id) const;

  bool operator==(const RunConfig&) const = default;
};

}  // namespace fedcmd::fl
