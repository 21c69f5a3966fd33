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
#include <span>
#include <string>
#include <vector>

#include "fl/config.hpp"
#include "fl/records.hpp"

namespace fedcmd::fl {

inline constexpr std::uint64_t kBytesPerParam = 4;

// Running total of bytes_up + bytes_down after each record.
std::vector<std::uint64_t> account_communication(std::span<const RoundRecord> records);

struct CommunicationPrediction {
  std::string formula;  // symbolic form with the numbers substituted
  std::vector<std::uint64_t> up;    // per round
  std::vector<std::uint64_t> down;  // per round
  std::vector<std::uint64_t> cumulative;
  std::uint64_t total = 0;
};

// Closed form per strategy, with n = |C^k|, T = |theta| and H = |phi_{l*}|:
//   fedavg      4*K*n*(2T)
//   local-only  0
//   fixed-head  4*K*n*(2T - 2H), H = last parameterized layer
//   fedcmd      4*K_p*n*(2T) + 4*(K - K_p)*n*(2T - 2H)
// Phase-2 bodies are sent per client, so the down leg counts n bodies.
CommunicationPrediction predict_communication(const RunConfig& config, std::uint64_t total_params,
                                              std::uint64_t head_params);

}  // namespace fedcmd::fl
