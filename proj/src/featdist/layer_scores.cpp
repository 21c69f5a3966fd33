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

#include "featdist/layer_scores.hpp"

#include <algorithm>
#include <numeric>

#include "common/error.hpp"

namespace fedcmd::featdist {
namespace {

bool starts_block(nn::LayerKind kind) {
  return kind == nn::LayerKind::kConv2d || kind == nn::LayerKind::kDense;
}

}  // namespace

std::vector<std::string> eligible_layers(const nn::ModelSpec& spec) {
  std::vector<std::string> names;
  for (const auto& layer : spec.layers)
    if (starts_block(layer.kind)) names.push_back(layer.name);
  return names;
}

std::vector<std::size_t> block_outputs(const nn::ModelSpec& spec,
                                       std::span<const std::string> eligible) {
  std::vector<std::size_t> out;
  out.reserve(eligible.size());
  std::size_t previous = 0;
  for (std::size_t e = 0; e < eligible.size(); ++e) {
    const std::string& name = eligible[e];
    auto it = std::find_if(spec.layers.begin(), spec.layers.end(),
                           [&](const nn::LayerSpec& l) { return l.name == name; });
    if (it == spec.layers.end())
      fail(ErrorCode::kInvalidArgument, "eligible layer '" + name + "' is not in the model");
    if (!starts_block(it->kind))
      fail(ErrorCode::kInvalidArgument, "layer '" + name + "' is not a conv2d or dense layer");
    std::size_t start = static_cast<std::size_t>(it - spec.layers.begin());
    if (e > 0 && start <= previous)
      fail(ErrorCode::kInvalidArgument, "eligible layers must follow spec order");
    previous = start;
    std::size_t last = start;
    while (last + 1 < spec.layers.size() && !starts_block(spec.layers[last + 1].kind)) ++last;
    out.push_back(last);
  }
  return out;
}

GaussianSummary fit_inputs(const nn::LabeledData& data) { return fit_gaussian(data.inputs); }

GaussianSummary fit_labels(std::span<const std::int32_t> labels, int num_classes,
                           LabelEncoding encoding) {
  if (labels.empty()) fail(ErrorCode::kInvalidArgument, "cannot fit labels of an empty dataset");
  GaussianAccumulator acc;
  for (auto y : labels) {
    if (encoding == LabelEncoding::kIndex) {
      acc.add(static_cast<double>(y));
    } else {
      for (int k = 0; k < num_classes; ++k) acc.add(k == y ? 1.0 : 0.0);
    }
  }
  return acc.summary();
}

LayerScorer::LayerScorer(const nn::ModelSpec& spec, std::vector<std::string> eligible)
    : eligible_(std::move(eligible)) {
  if (eligible_.empty()) fail(ErrorCode::kInvalidArgument, "no eligible layers to score");
  trace_index_ = block_outputs(spec, eligible_);
  acc_.resize(eligible_.size());
}

void LayerScorer::observe(const nn::ForwardTrace& trace) {
  for (std::size_t e = 0; e < eligible_.size(); ++e) {
    if (trace_index_[e] >= trace.size())
      fail(ErrorCode::kInvalidArgument, "forward trace is shorter than the model");
    acc_[e].add(trace.outputs[trace_index_[e]].data);
  }
}

std::vector<GaussianSummary> LayerScorer::summaries() const {
  std::vector<GaussianSummary> out;
  out.reserve(acc_.size());
  for (const auto& a : acc_) out.push_back(a.summary());
  return out;
}

std::vector<LayerScore> LayerScorer::finish(const GaussianSummary& z_x,
                                            const GaussianSummary& z_y) const {
  const auto z = summaries();
  std::vector<LayerScore> scores;
  scores.reserve(z.size());
  for (std::size_t e = 0; e < z.size(); ++e) {
    const GaussianSummary& prev = e == 0 ? z_x : z[e - 1];
    scores.push_back({eligible_[e], transfer_score(prev, z[e], z_x, z_y)});
  }
  return scores;
}

std::vector<LayerScore> score_all_layers(const nn::Model& model, const nn::LabeledData& data,
                                         const GaussianSummary& z_x, const GaussianSummary& z_y,
                                         const std::vector<std::string>& eligible,
                                         int batch_size) {
  LayerScorer scorer(model.spec(), eligible);
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t step = static_cast<std::size_t>(std::max(1, batch_size));
  for (std::size_t start = 0; start < idx.size(); start += step) {
    const std::size_t end = std::min(idx.size(), start + step);
    const auto batch = nn::gather_batch(model.spec().input, data,
                                        std::span<const std::size_t>(idx.data() + start, end - start));
    scorer.observe(nn::forward(model, batch, nn::Mode::kEval).trace);
  }
  return scorer.finish(z_x, z_y);
}

}  // namespace fedcmd::featdist
