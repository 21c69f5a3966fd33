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

#include <cstddef>
#include <span>

namespace fedcmd::featdist {

// Floor on fitted standard deviations; constant activations (dead ReLUs)
// would otherwise give degenerate summaries.
inline constexpr double kSigmaMin = 1e-6;

struct GaussianSummary {
  double mean = 0.0;
  double std = kSigmaMin;

  bool operator==(const GaussianSummary&) const = default;
};

// Single-pass (Welford) accumulator, population variance.
class GaussianAccumulator {
 public:
  void add(double value);
  void add(std::span<const float> values);
  void merge(const GaussianAccumulator& other);

  std::size_t count() const { return count_; }
  std::size_t non_finite() const { return non_finite_; }

  // Throws kInvalidArgument when empty or when any value was non-finite.
  GaussianSummary summary() const;

 private:
  std::size_t count_ = 0;
  std::size_t non_finite_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

GaussianSummary fit_gaussian(std::span<const double> values);
GaussianSummary fit_gaussian(std::span<const float> values);

// Closed-form 2-Wasserstein distance between univariate Gaussians.
double w2_gaussian(const GaussianSummary& a, const GaussianSummary& b);

// | (W2(cur, y) - W2(cur, x)) - (W2(prev, y) - W2(prev, x)) |
double transfer_score(const GaussianSummary& z_prev, const GaussianSummary& z_cur,
                      const GaussianSummary& z_x, const GaussianSummary& z_y);

}  // namespace fedcmd::featdist
