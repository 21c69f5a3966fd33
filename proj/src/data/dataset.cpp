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

#include "data/dataset.hpp"

#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace fedcmd::data {

void Dataset::validate() const {
  if (labels.empty()) fail(ErrorCode::kInvalidArgument, "dataset is empty");
  if (num_classes < 1) fail(ErrorCode::kInvalidArgument, "dataset has no classes");
  if (inputs.size() != labels.size() * sample_size())
    fail(ErrorCode::kInvalidArgument, "dataset inputs hold " + std::to_string(inputs.size()) +
                                          " values for " + std::to_string(labels.size()) +
                                          " samples of shape " + nn::shape_string(sample_shape));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      fail(ErrorCode::kInvalidArgument, "label " + std::to_string(labels[i]) + " at index " +
                                            std::to_string(i) + " outside [0, " +
                                            std::to_string(num_classes) + ")");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.sample_shape = sample_shape;
  out.num_classes = num_classes;
  const std::size_t per = sample_size();
  out.inputs.resize(indices.size() * per);
  out.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= size()) fail(ErrorCode::kInvalidArgument, "sample index " + std::to_string(src) + " out of range");
    std::copy_n(inputs.begin() + src * per, per, out.inputs.begin() + i * per);
    out.labels[i] = labels[src];
  }
  return out;
}

Dataset generate_synthetic(const SyntheticOptions& options) {
  if (options.num_classes < 2) fail(ErrorCode::kInvalidArgument, "synthetic data needs at least 2 classes");
  if (options.samples_per_class < 1) fail(ErrorCode::kInvalidArgument, "samples_per_class must be positive");
  if (!(options.class_separation > 0.0)) fail(ErrorCode::kInvalidArgument, "class separation must be positive");
  const std::size_t dim = nn::shape_size(options.input_shape);
  if (dim == 0) fail(ErrorCode::kInvalidArgument, "synthetic input shape is empty");

  const double radius = options.class_separation / std::sqrt(2.0);
  const auto k = static_cast<std::size_t>(options.num_classes);
  std::vector<double> centres(k * dim, 0.0);
  Rng rng(options.seed);
  if (dim >= k) {
    for (std::size_t c = 0; c < k; ++c) centres[c * dim + c] = radius;
  } else {
    for (std::size_t c = 0; c < k; ++c) {
      double norm = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        centres[c * dim + d] = rng.normal();
        norm += centres[c * dim + d] * centres[c * dim + d];
      }
      norm = std::sqrt(norm);
      for (std::size_t d = 0; d < dim; ++d) centres[c * dim + d] *= radius / norm;
    }
  }

  Dataset out;
  out.sample_shape = options.input_shape;
  out.num_classes = options.num_classes;
  const std::size_t n = k * static_cast<std::size_t>(options.samples_per_class);
  out.inputs.resize(n * dim);
  out.labels.resize(n);
  std::size_t i = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (int s = 0; s < options.samples_per_class; ++s, ++i) {
      out.labels[i] = static_cast<std::int32_t>(c);
      for (std::size_t d = 0; d < dim; ++d)
        out.inputs[i * dim + d] = static_cast<float>(centres[c * dim + d] + rng.normal());
    }
  }
  return out;
}

double label_entropy(std::span<const std::size_t> histogram) {
  double total = 0.0;
  for (auto h : histogram) total += static_cast<double>(h);
  if (total == 0.0) return 0.0;
  double entropy = 0.0;
  for (auto h : histogram) {
    if (h == 0) continue;
    const double p = static_cast<double>(h) / total;
    entropy -= p * std::log(p);
  }
  return entropy;
}

std::vector<std::size_t> class_histogram(const Dataset& data, std::span<const std::size_t> indices) {
  std::vector<std::size_t> hist(static_cast<std::size_t>(data.num_classes), 0);
  for (auto i : indices) ++hist[static_cast<std::size_t>(data.labels.at(i))];
  return hist;
}

}  // namespace fedcmd::data
