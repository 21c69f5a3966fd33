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

#include "selection/vote.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace fedcmd::selection {
namespace {

std::size_t rank_of(std::span<const std::string> order, const std::string& layer) {
  auto it = std::find(order.begin(), order.end(), layer);
  if (it == order.end()) fail(ErrorCode::kInvalidArgument, "layer '" + layer + "' is not in the layer order");
  return static_cast<std::size_t>(it - order.begin());
}

std::string mode_of(const std::vector<std::string>& items, std::span<const std::string> order) {
  std::vector<int> counts(order.size(), 0);
  for (const auto& item : items) ++counts[rank_of(order, item)];
  // max_element returns the first maximum, i.e. the earliest layer.
  const auto best = std::max_element(counts.begin(), counts.end());
  return order[static_cast<std::size_t>(best - counts.begin())];
}

}  // namespace

std::string client_vote(std::span<const featdist::LayerScore> scores,
                        std::span<const std::string> layer_order) {
  if (scores.empty()) fail(ErrorCode::kInvalidArgument, "client_vote needs at least one score");
  const featdist::LayerScore* best = &scores[0];
  std::size_t best_rank = rank_of(layer_order, best->layer);
  for (const auto& s : scores.subspan(1)) {
    const std::size_t r = rank_of(layer_order, s.layer);
    if (s.score < best->score || (s.score == best->score && r < best_rank)) {
      best = &s;
      best_rank = r;
    }
  }
  return best->layer;
}

std::string round_vote(const std::map<int, std::string>& votes,
                       std::span<const std::string> layer_order) {
  if (votes.empty()) fail(ErrorCode::kInvalidArgument, "round_vote needs at least one vote");
  std::vector<std::string> items;
  items.reserve(votes.size());
  for (const auto& [client, layer] : votes) items.push_back(layer);
  return mode_of(items, layer_order);
}

VoteLedger::VoteLedger(std::vector<std::string> layer_order, int required_rounds)
    : layer_order_(std::move(layer_order)), required_rounds_(required_rounds) {
  if (layer_order_.empty()) fail(ErrorCode::kInvalidArgument, "vote ledger needs candidate layers");
  if (required_rounds_ < 1) fail(ErrorCode::kInvalidArgument, "vote ledger needs at least one round");
}

const std::string& VoteLedger::record_round(int round, std::map<int, std::string> votes) {
  if (final_) fail(ErrorCode::kState, "vote ledger is already finalized");
  if (winners_.contains(round)) fail(ErrorCode::kState, "round " + std::to_string(round) + " already recorded");
  auto winner = round_vote(votes, layer_order_);
  votes_.emplace(round, std::move(votes));
  return winners_.emplace(round, std::move(winner)).first->second;
}

const std::string& VoteLedger::finalize() {
  if (final_) return *final_;
  if (rounds_seen() != required_rounds_)
    fail(ErrorCode::kState, "cannot finalize after " + std::to_string(rounds_seen()) + " of " +
                                std::to_string(required_rounds_) + " selection rounds");
  std::vector<std::string> items;
  for (const auto& [round, layer] : winners_) items.push_back(layer);
  final_ = mode_of(items, layer_order_);
  return *final_;
}

}  // namespace fedcmd::selection
