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
#include <vector>

namespace fedcmd::fl {

enum class Phase { kSelection, kFederated };

inline const char* phase_name(Phase p) { return p == Phase::kSelection ? "selection" : "federated"; }

struct RoundRecord {
  int round = 0;  // 1-based
  Phase phase = Phase::kFederated;
  std::vector<int> sampled_clients;
  // Set on evaluation rounds only; covers all clients.
  std::optional<double> mean_accuracy;
  std::optional<double> std_accuracy;
  double mean_train_loss = 0.0;  // over sampled clients, last local epoch
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  // Heads uploaded only so the server can build the similarity matrix.
  std::uint64_t similarity_probe_bytes = 0;
  std::optional<std::string> winner;  // selection rounds only
  std::vector<int> fallback_clients;  // zero-row similarity fallbacks

  bool operator==(const RoundRecord&) const = default;
};

}  // namespace fedcmd::fl
