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
#include <vector>

#include "nn/layer_spec.hpp"
#include "nn/model.hpp"

namespace fedcmd::data {

struct Dataset {
  nn::Shape sample_shape;
  std::vector<float> inputs;  // size() * shape_size(sample_shape), sample-major
  std::vector<std::int32_t> labels;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t sample_size() const { return nn::shape_size(sample_shape); }
  nn::LabeledData view() const { return {inputs, labels}; }

  // Throws kInvalidArgument on any invariant violation.
  void validate() const;

  Dataset subset(std::span<const std::size_t> indices) const;

  bool operator==(const Dataset&) const = default;
};

struct SyntheticOptions {
  int num_classes = 10;
  int samples_per_class = 100;
  nn::Shape input_shape = {20};
  double class_separation = 4.0;
  std::uint64_t seed = 0;
};

// Isotropic unit-variance Gaussian blobs. When the input has at least as
// many entries as classes, class c is centred on (separation / sqrt 2) * e_c,
// so every pair of class means is exactly `separation` apart; otherwise the
// centres are random directions of the same radius. Samples are class-major.
Dataset generate_synthetic(const SyntheticOptions& options);

// Shannon entropy (nats) of a label histogram; empty histograms have zero
// entropy.
double label_entropy(std::span<const std::size_t> histogram);

std::vector<std::size_t> class_histogram(const Dataset& data,
                                         std::span<const std::size_t> indices);

}  // namespace fedcmd::data
