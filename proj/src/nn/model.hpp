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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nn/engine.hpp"
#include "nn/layer_spec.hpp"

namespace fedcmd::nn {

// A built network: layer specs plus one flat float array per layer.
// Parameter-free layers own empty arrays.
class Model {
 public:
  Model(ModelSpec spec, LayerParams<float> params, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<LayerGeometry>& geometry() const { return geometry_; }
  const LayerParams<float>& params() const { return params_; }
  LayerParams<float>& mutable_params() { return params_; }
  std::uint64_t seed() const { return seed_; }

  std::size_t num_layers() const { return spec_.layers.size(); }
  std::size_t num_params() const;
  int num_classes() const { return geometry_.back().out[0]; }

  std::optional<std::size_t> find_layer(std::string_view name) const;
  // Throws kInvalidArgument listing the valid names.
  std::size_t layer_index(std::string_view name) const;
  std::vector<std::string> parameterized_layers() const;

  // Replaces all parameters; sizes must match layer by layer.
  void set_params(LayerParams<float> params);

  bool operator==(const Model& other) const {
    return spec_ == other.spec_ && params_ == other.params_;
  }

 private:
  ModelSpec spec_;
  std::vector<LayerGeometry> geometry_;
  LayerParams<float> params_;
  std::uint64_t seed_ = 0;
};

// He-uniform weights (bound sqrt(6 / fan_in)), zero biases, batch-norm
// scale 1, shift 0, running mean 0, running variance 1.
Model build_model(const ModelSpec& spec, std::uint64_t seed);

struct ForwardTrace {
  std::vector<std::string> names;
  std::vector<Tensor<float>> outputs;

  std::size_t size() const { return names.size(); }
  const Tensor<float>& at(std::string_view name) const;
};

struct ForwardResult {
  Tensor<float> logits;
  ForwardTrace trace;
};

ForwardResult forward(const Model& model, const Tensor<float>& batch,
                      Mode mode = Mode::kEval);

// Samples stored contiguously; the per-sample shape is the model input shape.
struct LabeledData {
  std::span<const float> inputs;
  std::span<const std::int32_t> labels;

  std::size_t size() const { return labels.size(); }
};

Tensor<float> gather_batch(const Shape& sample_shape, const LabeledData& data,
                           std::span<const std::size_t> indices);

struct SgdOptions {
  double lr = 0.01;
  int batch_size = 32;
  std::uint64_t shuffle_seed = 0;
};

struct EpochResult {
  Model model;
  double mean_loss = 0.0;  // sample-weighted over the epoch
};

// One pass of mini-batch SGD over data in a seeded order. Throws kNumeric
// naming the layer when a gradient goes non-finite.
EpochResult sgd_epoch(Model model, const LabeledData& data, const SgdOptions& options);

// theta = body (omega) composed with head (phi).
struct ParamPartition {
  std::map<std::string, std::vector<float>> body;
  std::map<std::string, std::vector<float>> head;
  std::string head_layer;
};

ParamPartition split_params(const Model& model, std::string_view head_layer);

LayerParams<float> merge_params(const Model& model, const ParamPartition& partition);

}  // namespace fedcmd::nn
