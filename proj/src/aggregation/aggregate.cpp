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

#include "aggregation/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "common/error.hpp"

namespace fedcmd::aggregation {

std::vector<float> fedavg(std::span<const WeightedParams> inputs) {
  if (inputs.empty()) fail(ErrorCode::kInvalidArgument, "fedavg needs at least one client");
  const std::size_t len = inputs.front().params.size();
  double total = 0.0;
  for (const auto& in : inputs) {
    if (in.params.size() != len)
      fail(ErrorCode::kShape, "fedavg length mismatch: " + std::to_string(in.params.size()) +
                                  " vs " + std::to_string(len));
    if (!(in.sample_count > 0.0)) fail(ErrorCode::kInvalidArgument, "fedavg sample counts must be positive");
    total += in.sample_count;
  }
  std::vector<double> acc(len, 0.0);
  for (const auto& in : inputs) {
    const double w = in.sample_count / total;
    for (std::size_t k = 0; k < len; ++k) acc[k] += w * static_cast<double>(in.params[k]);
  }
  return {acc.begin(), acc.end()};
}

double cosine_similarity(std::span<const float> a, std::span<const float> b, double epsilon) {
  if (a.size() != b.size())
    fail(ErrorCode::kShape, "cosine similarity length mismatch: " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  if (!(epsilon > 0.0)) fail(ErrorCode::kInvalidArgument, "epsilon must be positive");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = a[k];
    const double y = b[k];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  const double value = dot / (std::sqrt(na) * std::sqrt(nb) + epsilon);
  return std::clamp(value, 0.0, 1.0);
}

SimilarityMatrix SimilarityMatrix::identity(std::vector<int> client_ids) {
  SimilarityMatrix m;
  m.client_ids = std::move(client_ids);
  m.values.assign(m.size() * m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) m.values[i * m.size() + i] = 1.0;
  return m;
}

SimilarityMatrix build_similarity(const std::map<int, std::vector<float>>& heads, double epsilon) {
  if (heads.empty()) fail(ErrorCode::kInvalidArgument, "similarity needs at least one client");
  SimilarityMatrix m;
  std::vector<const std::vector<float>*> rows;
  for (const auto& [id, head] : heads) {
    m.client_ids.push_back(id);
    rows.push_back(&head);
  }
  const std::size_t n = m.size();
  m.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m.values[i * n + j] = cosine_similarity(*rows[i], *rows[j], epsilon);
  return m;
}

BodyUpdate weighted_body_update(const std::map<int, std::vector<float>>& bodies,
                                const SimilarityMatrix& phi) {
  BodyUpdate out;
  const std::size_t n = phi.size();
  if (bodies.size() != n) fail(ErrorCode::kInvalidArgument, "bodies and similarity matrix cover different clients");
  std::vector<const std::vector<float>*> rows;
  for (std::size_t j = 0; j < n; ++j) {
    auto it = bodies.find(phi.client_ids[j]);
    if (it == bodies.end())
      fail(ErrorCode::kInvalidArgument, "no body for client " + std::to_string(phi.client_ids[j]));
    if (!rows.empty() && it->second.size() != rows.front()->size())
      fail(ErrorCode::kShape, "body length mismatch for client " + std::to_string(phi.client_ids[j]));
    rows.push_back(&it->second);
  }
  const std::size_t len = rows.empty() ? 0 : rows.front()->size();
  std::vector<double> acc(len);
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) row_sum += phi.at(i, j);
    std::fill(acc.begin(), acc.end(), 0.0);
    std::vector<float> result(len);
    if (row_sum > 0.0) {
      for (std::size_t j = 0; j < n; ++j) {
        const double w = phi.at(i, j);
        const auto& body = *rows[j];
        for (std::size_t k = 0; k < len; ++k) acc[k] += w * static_cast<double>(body[k]);
      }
      const double inv = 1.0 / row_sum;
      for (std::size_t k = 0; k < len; ++k) result[k] = static_cast<float>(inv * acc[k]);
    } else {
      out.fallback_clients.push_back(phi.client_ids[i]);
      for (std::size_t j = 0; j < n; ++j) {
        const auto& body = *rows[j];
        for (std::size_t k = 0; k < len; ++k) acc[k] += static_cast<double>(body[k]);
      }
      for (std::size_t k = 0; k < len; ++k) result[k] = static_cast<float>(acc[k] / static_cast<double>(n));
    }
    out.bodies.emplace(phi.client_ids[i], std::move(result));
  }
  return out;
}

std::string similarity_csv(const SimilarityMatrix& phi) {
  std::string out = "client";
  for (int id : phi.client_ids) out += "," + std::to_string(id);
  out += "\n";
  char buf[32];
  for (std::size_t i = 0; i < phi.size(); ++i) {
    out += std::to_string(phi.client_ids[i]);
    for (std::size_t j = 0; j < phi.size(); ++j) {
      std::snprintf(buf, sizeof(buf), ",%.17g", phi.at(i, j));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace fedcmd::aggregation
