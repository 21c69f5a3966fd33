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

#include "nn/model.hpp"

#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace fedcmd::nn {

Model::Model(ModelSpec spec, LayerParams<float> params, std::uint64_t seed)
    : spec_(std::move(spec)), geometry_(infer_geometry(spec_)), seed_(seed) {
  set_params(std::move(params));
}

void Model::set_params(LayerParams<float> params) {
  if (params.size() != spec_.layers.size())
    fail(ErrorCode::kShape, "parameter list has " + std::to_string(params.size()) +
                                 " layers, model has " + std::to_string(spec_.layers.size()));
  for (std::size_t l = 0; l < params.size(); ++l) {
    if (params[l].size() != geometry_[l].param_count)
      fail(ErrorCode::kShape, "layer '" + spec_.layers[l].name + "' expects " +
                                   std::to_string(geometry_[l].param_count) +
                                   " parameters, received " + std::to_string(params[l].size()));
  }
  params_ = std::move(params);
}

std::size_t Model::num_params() const {
  std::size_t n = 0;
  for (const auto& g : geometry_) n += g.param_count;
  return n;
}

std::optional<std::size_t> Model::find_layer(std::string_view name) const {
  for (std::size_t l = 0; l < spec_.layers.size(); ++l)
    if (spec_.layers[l].name == name) return l;
  return std::nullopt;
}

std::size_t Model::layer_index(std::string_view name) const {
  if (auto l = find_layer(name)) return *l;
  std::string valid;
  for (const auto& n : parameterized_layers()) valid += (valid.empty() ? "" : ", ") + n;
  fail(ErrorCode::kInvalidArgument,
       "unknown layer '" + std::string(name) + "'; parameterized layers are: " + valid);
}

std::vector<std::string> Model::parameterized_layers() const {
  std::vector<std::string> names;
  for (const auto& layer : spec_.layers)
    if (has_parameters(layer.kind)) names.push_back(layer.name);
  return names;
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  const auto geometry = infer_geometry(spec);
  LayerParams<float> params(spec.layers.size());
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const LayerSpec& layer = spec.layers[l];
    const LayerGeometry& g = geometry[l];
    auto& p = params[l];
    p.assign(g.param_count, 0.0f);
    Rng rng(derive_seed(seed, {seed_tag::kInit, l}));
    switch (layer.kind) {
      case LayerKind::kConv2d: {
        const std::size_t fan_in = static_cast<std::size_t>(g.in[0]) * layer.kernel * layer.kernel;
        const std::size_t weights = static_cast<std::size_t>(layer.out_channels) * fan_in;
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < weights; ++i) p[i] = static_cast<float>(rng.uniform(-bound, bound));
        break;
      }
      case LayerKind::kDense: {
        const std::size_t fan_in = static_cast<std::size_t>(g.in[0]);
        const std::size_t weights = static_cast<std::size_t>(layer.out_features) * fan_in;
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < weights; ++i) p[i] = static_cast<float>(rng.uniform(-bound, bound));
        break;
      }
      case LayerKind::kBatchNorm: {
        const std::size_t c = static_cast<std::size_t>(g.in[0]);
        for (std::size_t i = 0; i < c; ++i) {
          p[i] = 1.0f;          // gamma
          p[3 * c + i] = 1.0f;  // running variance
        }
        break;
      }
      default:
        break;
    }
  }
  return Model(spec, std::move(params), seed);
}

const Tensor<float>& ForwardTrace::at(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return outputs[i];
  fail(ErrorCode::kInvalidArgument, "trace has no layer '" + std::string(name) + "'");
}

ForwardResult forward(const Model& model, const Tensor<float>& batch, Mode mode) {
  Workspace<float> ws;
  forward_pass(model.spec(), model.geometry(), model.params(), batch, mode, ws);
  ForwardResult result;
  result.trace.names.reserve(model.num_layers());
  for (const auto& layer : model.spec().layers) result.trace.names.push_back(layer.name);
  result.logits = ws.outputs.back();
  result.trace.outputs = std::move(ws.outputs);
  return result;
}

Tensor<float> gather_batch(const Shape& sample_shape, const LabeledData& data,
                           std::span<const std::size_t> indices) {
  const std::size_t per = shape_size(sample_shape);
  if (data.inputs.size() != data.labels.size() * per)
    fail(ErrorCode::kShape, "input buffer holds " + std::to_string(data.inputs.size()) +
                                 " values, expected " + std::to_string(data.labels.size()) +
                                 " samples of shape " + shape_string(sample_shape));
  Tensor<float> batch(static_cast<int>(indices.size()), sample_shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const float* src = data.inputs.data() + indices[i] * per;
    std::copy(src, src + per, batch.data.begin() + i * per);
  }
  return batch;
}

EpochResult sgd_epoch(Model model, const LabeledData& data, const SgdOptions& options) {
  if (!(options.lr >= 0.0) || !std::isfinite(options.lr))
    fail(ErrorCode::kInvalidArgument, "learning rate must be finite and non-negative");
  if (options.batch_size <= 0) fail(ErrorCode::kInvalidArgument, "batch size must be positive");
  if (data.size() == 0) fail(ErrorCode::kInvalidArgument, "training data is empty");

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(options.shuffle_seed);
  rng.shuffle(order);

  const ModelSpec& spec = model.spec();
  const auto& geometry = model.geometry();
  const auto lr = static_cast<float>(options.lr);
  double loss_sum = 0.0;

  for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
    const std::size_t end = std::min(order.size(), start + options.batch_size);
    const std::span<const std::size_t> idx(order.data() + start, end - start);
    const Tensor<float> batch = gather_batch(spec.input, data, idx);
    std::vector<std::int32_t> labels(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = data.labels[idx[i]];

    auto lg = loss_and_gradients(spec, geometry, model.params(), batch, labels, Mode::kTrain);
    for (std::size_t l = 0; l < lg.grads.size(); ++l) {
      for (float g : lg.grads[l]) {
        if (!std::isfinite(g))
          fail(ErrorCode::kNumeric, "non-finite gradient in layer '" + spec.layers[l].name + "'");
      }
    }
    if (!std::isfinite(lg.loss))
      fail(ErrorCode::kNumeric, "non-finite training loss at batch starting " + std::to_string(start));
    loss_sum += lg.loss * static_cast<double>(idx.size());

    auto& params = model.mutable_params();
    for (std::size_t l = 0; l < params.size(); ++l) {
      auto& p = params[l];
      const auto& g = lg.grads[l];
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
      if (spec.layers[l].kind == LayerKind::kBatchNorm) {
        const std::size_t c = static_cast<std::size_t>(geometry[l].in[0]);
        const auto& mean = lg.workspace.batch_mean[l];
        const auto& var = lg.workspace.batch_var[l];
        for (std::size_t i = 0; i < c; ++i) {
          p[2 * c + i] = static_cast<float>((1.0 - kBatchNormMomentum) * p[2 * c + i] +
                                            kBatchNormMomentum * mean[i]);
          p[3 * c + i] = static_cast<float>((1.0 - kBatchNormMomentum) * p[3 * c + i] +
                                            kBatchNormMomentum * var[i]);
        }
      }
    }
  }
  const double mean_loss = loss_sum / static_cast<double>(data.size());
  return {std::move(model), mean_loss};
}

ParamPartition split_params(const Model& model, std::string_view head_layer) {
  const std::size_t h = model.layer_index(head_layer);
  if (!has_parameters(model.spec().layers[h].kind)) {
    std::string valid;
    for (const auto& n : model.parameterized_layers()) valid += (valid.empty() ? "" : ", ") + n;
    fail(ErrorCode::kInvalidArgument, "layer '" + std::string(head_layer) +
                                          "' has no parameters; parameterized layers are: " + valid);
  }
  ParamPartition partition;
  partition.head_layer = std::string(head_layer);
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const auto& layer = model.spec().layers[l];
    if (!has_parameters(layer.kind)) continue;
    auto& side = l == h ? partition.head : partition.body;
    side.emplace(layer.name, model.params()[l]);
  }
  return partition;
}

LayerParams<float> merge_params(const Model& model, const ParamPartition& partition) {
  for (const auto& [name, values] : partition.body) {
    if (partition.head.contains(name))
      fail(ErrorCode::kInvalidArgument, "layer '" + name + "' appears in both body and head");
  }
  for (const auto* side : {&partition.body, &partition.head}) {
    for (const auto& [name, values] : *side) {
      const auto l = model.find_layer(name);
      if (!l || !has_parameters(model.spec().layers[*l].kind))
        fail(ErrorCode::kInvalidArgument, "partition names '" + name +
                                              "', which is not a parameterized layer");
    }
  }
  LayerParams<float> params(model.num_layers());
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const auto& layer = model.spec().layers[l];
    if (!has_parameters(layer.kind)) continue;
    const std::vector<float>* source = nullptr;
    if (auto it = partition.body.find(layer.name); it != partition.body.end()) source = &it->second;
    if (auto it = partition.head.find(layer.name); it != partition.head.end()) source = &it->second;
    if (!source) fail(ErrorCode::kInvalidArgument, "partition is missing layer '" + layer.name + "'");
    if (source->size() != model.geometry()[l].param_count)
      fail(ErrorCode::kShape, "partition array for layer '" + layer.name + "' has " +
                                   std::to_string(source->size()) + " values, expected " +
                                   std::to_string(model.geometry()[l].param_count));
    params[l] = *source;
  }
  return params;
}

}  // namespace fedcmd::nn
