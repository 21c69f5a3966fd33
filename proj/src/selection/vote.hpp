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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "featdist/layer_scores.hpp"

namespace fedcmd::selection {

// All three levels break ties by the earliest position in layer_order (the
// model's spec order), never by container iteration order.

// Layer with the minimal transfer score.
std::string client_vote(std::span<const featdist::LayerScore> scores,
                        std::span<const std::string> layer_order);

// Modal layer over the sampled clients' votes.
std::string round_vote(const std::map<int, std::string>& votes,
                       std::span<const std::string> layer_order);

class VoteLedger {
 public:
  VoteLedger(std::vector<std::string> layer_order, int required_rounds);

  // Tallies one round and records its winner. Throws kState once finalized or
  // when a round number repeats.
  const std::string& record_round(int round, std::map<int, std::string> votes);

  // Mode of the per-round winners. Throws kState unless exactly
  // required_rounds rounds are recorded.
  const std::string& finalize();

  int rounds_seen() const { return static_cast<int>(winners_.size()); }
  int required_rounds() const { return required_rounds_; }
  const std::map<int, std::string>& winners() const { return winners_; }
  const std::map<int, std::map<int, std::string>>& votes() const { return votes_; }
  const std::optional<std::string>& final_layer() const { return final_; }
  const std::vector<std::string>& layer_order() const { return layer_order_; }

 private:
  std::vector<std::string> layer_order_;
  int required_rounds_ = 0;
  std::map<int, std::string> winners_;
  std::map<int, std::map<int, std::string>> votes_;
  std::optional<std::string> final_;
};

}  // namespace fedcmd::selection
