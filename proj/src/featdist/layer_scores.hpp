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
#include <string>
#include <vector>

#include "featdist/gaussian.hpp"
#include "nn/model.hpp"

namespace fedcmd::featdist {

struct LayerScore {
  std::string layer;
  double score = 0.0;

  bool operator==(const LayerScore&) const = default;
};

// How z^y is built from integer labels.
enum class LabelEncoding {
  kOneHot,  // mean/std over all entries of the one-hot label matrix
  kIndex,   // mean/std over the raw class indices
};

// Vote-eligible layers: conv2d and dense, in spec order.
std::vector<std::string> eligible_layers(const nn::ModelSpec& spec);

// The trace position whose activations summarize an eligible layer: the last
// layer of its block, where a block runs from the conv/dense layer up to (not
// including) the next conv/dense layer. batchnorm, ReLU, pooling and flatten
// outputs therefore count towards the layer that produced them.
std::vector<std::size_t> block_outputs(const nn::ModelSpec& spec,
                                       std::span<const std::string> eligible);

GaussianSummary fit_inputs(const nn::LabeledData& data);
GaussianSummary fit_labels(std::span<const std::int32_t> labels, int num_classes,
                           LabelEncoding encoding);

// Streams forward traces and accumulates one pooled Gaussian per eligible
// layer. Scores use z_x as z^{o_{l-1}} for the first eligible layer.
class LayerScorer {
 public:
  LayerScorer(const nn::ModelSpec& spec, std::vector<std::string> eligible);

  void observe(const nn::ForwardTrace& trace);

  std::vector<GaussianSummary> summaries() const;
  std::vector<LayerScore> finish(const GaussianSummary& z_x, const GaussianSummary& z_y) const;

 private:
  std::vector<std::string> eligible_;
  std::vector<std::size_t> trace_index_;
  std::vector<GaussianAccumulator> acc_;
};

// Runs the model in eval mode over all of data in batches of batch_size and
// scores every eligible layer.
std::vector<LayerScore> score_all_layers(const nn::Model& model, const nn::LabeledData& data,
                                         const GaussianSummary& z_x, const GaussianSummary& z_y,
                                         const std::vector<std::string>& eligible,
                                         int batch_size = 256);

}  // namespace fedcmd::featdist
