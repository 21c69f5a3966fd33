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

#include "fl/comm.hpp"

namespace fedcmd::fl {

std::vector<std::uint64_t> account_communication(std::span<const RoundRecord> records) {
  std::vector<std::uint64_t> cumulative;
  cumulative.reserve(records.size());
  std::uint64_t total = 0;
  for (const auto& r : records) {
    total += r.bytes_up + r.bytes_down;
    cumulative.push_back(total);
  }
  return cumulative;
}

CommunicationPrediction predict_communication(const RunConfig& config, std::uint64_t total_params,
                                              std::uint64_t head_params) {
  CommunicationPrediction p;
  const std::uint64_t k = static_cast<std::uint64_t>(config.rounds);
  const std::uint64_t n = static_cast<std::uint64_t>(config.clients_per_round());
  const std::uint64_t kp = static_cast<std::uint64_t>(config.selection_rounds());
  const std::uint64_t t = total_params;
  const std::uint64_t h = head_params;
  const std::string ns = std::to_string(n);
  const std::string ts = std::to_string(t);
  const std::string hs = std::to_string(h);

  auto per_round = [&](std::uint64_t round) -> std::uint64_t {
    switch (config.strategy) {
      case Strategy::kLocalOnly: return 0;
      case Strategy::kFedAvg: return kBytesPerParam * n * t;
      case Strategy::kFixedHead: return kBytesPerParam * n * (t - h);
      case Strategy::kFedCmd: return round <= kp ? kBytesPerParam * n * t : kBytesPerParam * n * (t - h);
    }
    return 0;
  };

  std::uint64_t total = 0;
  for (std::uint64_t r = 1; r <= k; ++r) {
    const std::uint64_t leg = per_round(r);
    p.up.push_back(leg);
    p.down.push_back(leg);
    total += 2 * leg;
    p.cumulative.push_back(total);
  }
  p.total = total;

  switch (config.strategy) {
    case Strategy::kLocalOnly:
      p.formula = "0";
      break;
    case Strategy::kFedAvg:
      p.formula = "4*K*|C^k|*(2*|theta|) = 4*" + std::to_string(k) + "*" + ns + "*(2*" + ts + ")";
      break;
    case Strategy::kFixedHead:
      p.formula = "4*K*|C^k|*(2*|theta| - 2*|phi|) = 4*" + std::to_string(k) + "*" + ns + "*(2*" + ts +
                  " - 2*" + hs + ")";
      break;
    case Strategy::kFedCmd:
      p.formula = "4*K_p*|C^k|*(2*|theta|) + 4*(K-K_p)*|C^k|*(2*|theta| - 2*|phi_l*|) = 4*" +
                  std::to_string(kp) + "*" + ns + "*(2*" + ts + ") + 4*" + std::to_string(k - kp) + "*" + ns +
                  "*(2*" + ts + " - 2*" + hs + ")";
      break;
  }
  p.formula += " = " + std::to_string(total) + " bytes";
  return p;
}

}  // namespace fedcmd::fl
