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
#include <span>
#include <string>
#include <vector>

namespace fedcmd::aggregation {

inline constexpr double kDefaultEpsilon = 1e-8;

struct WeightedParams {
  std::span<const float> params;
  double sample_count = 0.0;
};

// Sample-count weighted mean: sum_i (n_i / sum_j n_j) theta_i.
std::vector<float> fedavg(std::span<const WeightedParams> inputs);

// (a . b) / (|a| |b| + epsilon), clamped to [0, 1]. Reductions in double.
double cosine_similarity(std::span<const float> a, std::span<const float> b,
                         double epsilon = kDefaultEpsilon);

struct SimilarityMatrix {
  std::vector<int> client_ids;  // ascending
  std::vector<double> values;   // row-major, size n * n

  std::size_t size() const { return client_ids.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * size() + j]; }

  static SimilarityMatrix identity(std::vector<int> client_ids);
};

SimilarityMatrix build_similarity(const std::map<int, std::vector<float>>& heads,
                                  double epsilon = kDefaultEpsilon);

struct BodyUpdate {
  std::map<int, std::vector<float>> bodies;
  std::vector<int> fallback_clients;  // rows that summed to zero
};

// omega_i' = (1 / sum_j Phi_ij) * sum_j Phi_ij omega_j. A row whose weights
// sum to zero falls back to the plain unweighted mean and is reported.
BodyUpdate weighted_body_update(const std::map<int, std::vector<float>>& bodies,
                                const SimilarityMatrix& phi);

// Header row and column carry client ids.
std::string similarity_csv(const SimilarityMatrix& phi);

}  // namespace fedcmd::aggregation
