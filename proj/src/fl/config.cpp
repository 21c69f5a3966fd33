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

#include "fl/config.hpp"

#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "nn/architectures.hpp"

namespace fedcmd::fl {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kFedCmd: return "fedcmd";
    case Strategy::kFedAvg: return "fedavg";
    case Strategy::kLocalOnly: return "local-only";
    case Strategy::kFixedHead: return "fixed-head";
  }
  return "unknown";
}

std::string_view to_string(SplitMode m) {
  return m == SplitMode::kBeforeAfter ? "before_after" : "whole_body";
}

std::string_view to_string(featdist::LabelEncoding e) {
  return e == featdist::LabelEncoding::kOneHot ? "onehot" : "index";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "fedcmd") return Strategy::kFedCmd;
  if (s == "fedavg") return Strategy::kFedAvg;
  if (s == "local-only") return Strategy::kLocalOnly;
  if (s == "fixed-head") return Strategy::kFixedHead;
  fail(ErrorCode::kConfig, "unknown strategy '" + std::string(s) +
                               "' (expected fedcmd, fedavg, local-only or fixed-head)");
}

SplitMode parse_split_mode(std::string_view s) {
  if (s == "before_after") return SplitMode::kBeforeAfter;
  if (s == "whole_body") return SplitMode::kWholeBody;
  fail(ErrorCode::kConfig, "unknown split mode '" + std::string(s) + "' (expected before_after or whole_body)");
}

featdist::LabelEncoding parse_label_encoding(std::string_view s) {
  if (s == "onehot") return featdist::LabelEncoding::kOneHot;
  if (s == "index") return featdist::LabelEncoding::kIndex;
  fail(ErrorCode::kConfig, "unknown label encoding '" + std::string(s) + "' (expected onehot or index)");
}

void RunConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::kConfig, what); };
  if (rounds < 1) bad("rounds must be >= 1");
  if (!(join_ratio > 0.0 && join_ratio <= 1.0)) bad("join_ratio must be in (0, 1]");
  if (local_epochs < 1) bad("local_epochs must be >= 1");
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) bad("lr must be finite and non-negative");
  if (num_clients < 1) bad("num_clients must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) bad("alpha must be positive");
  if (!(epsilon > 0.0)) bad("epsilon must be positive");
  if (eval_every < 1) bad("eval_every must be >= 1");
  if (checkpoint_every < 0) bad("checkpoint_every must be >= 0");
  if (!nn::is_known_architecture(model)) bad("unknown model '" + model + "'");
  if (model == "mlp")
    for (int h : hidden)
      if (h < 1) bad("hidden layer widths must be positive");
  if (strategy == Strategy::kFedCmd) {
    if (!(rho > 0.0 && rho < 1.0)) bad("rho must be in (0, 1) for fedcmd");
    const int kp = selection_rounds();
    if (kp < 1 || kp >= rounds)
      bad("rho * rounds gives " + std::to_string(kp) + " selection rounds; need 1 <= K_p < K = " +
          std::to_string(rounds));
  }
}

int RunConfig::selection_rounds() const {
  if (strategy != Strategy::kFedCmd) return 0;
  return static_cast<int>(std::lround(rho * rounds));
}

int clients_per_round(double gamma, int num_clients) {
  const double raw = gamma * num_clients;
  // Tolerance so that 0.1 * 100 does not round up to 11.
  int n = static_cast<int>(std::ceil(raw - 1e-9));
  if (n < 1) n = 1;
  if (n > num_clients) n = num_clients;
  return n;
}

int RunConfig::clients_per_round() const { return fl::clients_per_round(join_ratio, num_clients); }

std::uint64_t RunConfig::resolved_data_seed() const {
  return data_seed ? *data_seed : derive_seed(seed, {seed_tag::kData});
}

std::uint64_t RunConfig::resolved_sampling_seed() const {
  return sampling_seed ? *sampling_seed : derive_seed(seed, {seed_tag::kSampling});
}

std::uint64_t RunConfig::init_seed() const { return derive_seed(seed, {seed_tag::kInit}); }

std::uint64_t RunConfig::client_seed(int client_id) const {
  return derive_seed(seed, {seed_tag::kClient, static_cast<std::uint64_t>(client_id)});
}

}  // namespace fedcmd::fl
