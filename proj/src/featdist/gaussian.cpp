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

#include "featdist/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "common/error.hpp"

namespace fedcmd::featdist {

void GaussianAccumulator::add(double value) {
  if (!std::isfinite(value)) {
    ++non_finite_;
    return;
  }
  ++count_;
  const double delta = value - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (value - mean_);
}

void GaussianAccumulator::add(std::span<const float> values) {
  for (float v : values) add(static_cast<double>(v));
}

void GaussianAccumulator::merge(const GaussianAccumulator& other) {
  non_finite_ += other.non_finite_;
  if (other.count_ == 0) return;
  if (count_ == 0) {
    count_ = other.count_;
    mean_ = other.mean_;
    m2_ = other.m2_;
    return;
  }
  const double n_a = static_cast<double>(count_);
  const double n_b = static_cast<double>(other.count_);
  const double n = n_a + n_b;
  const double delta = other.mean_ - mean_;
  mean_ += delta * n_b / n;
  m2_ += other.m2_ + delta * delta * n_a * n_b / n;
  count_ += other.count_;
}

GaussianSummary GaussianAccumulator::summary() const {
  if (non_finite_ > 0)
    fail(ErrorCode::kInvalidArgument, std::to_string(non_finite_) + " non-finite values in stream");
  if (count_ == 0) fail(ErrorCode::kInvalidArgument, "cannot fit a Gaussian to an empty stream");
  const double var = std::max(0.0, m2_ / static_cast<double>(count_));
  return {mean_, std::max(std::sqrt(var), kSigmaMin)};
}

GaussianSummary fit_gaussian(std::span<const double> values) {
  GaussianAccumulator acc;
  for (double v : values) acc.add(v);
  return acc.summary();
}

GaussianSummary fit_gaussian(std::span<const float> values) {
  GaussianAccumulator acc;
  acc.add(values);
  return acc.summary();
}

double w2_gaussian(const GaussianSummary& a, const GaussianSummary& b) {
  return std::hypot(a.mean - b.mean, a.std - b.std);
}

double transfer_score(const GaussianSummary& z_prev, const GaussianSummary& z_cur,
                      const GaussianSummary& z_x, const GaussianSummary& z_y) {
  const double part_a = w2_gaussian(z_cur, z_y) - w2_gaussian(z_cur, z_x);
  const double part_b = w2_gaussian(z_prev, z_y) - w2_gaussian(z_prev, z_x);
  return std::abs(part_a - part_b);
}

}  // namespace fedcmd::featdist
