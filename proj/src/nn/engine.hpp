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

// Numeric kernels for the fixed layer set. Templated on the scalar type so
// the same code path can be checked in double precision against finite
// differences; production models use float.

#include <cstdint>
#include <span>
#include <vector>

#include "nn/layer_spec.hpp"

namespace fedcmd::nn {

template <class Real>
struct Tensor {
  int batch = 0;
  Shape shape;  // per sample
  std::vector<Real> data;

  Tensor() = default;
  Tensor(int batch_size, Shape sample_shape)
      : batch(batch_size),
        shape(std::move(sample_shape)),
        data(static_cast<std::size_t>(batch) * shape_size(shape), Real(0)) {}

  std::size_t sample_size() const { return shape_size(shape); }
};

template <class Real>
using LayerParams = std::vector<std::vector<Real>>;

enum class Mode { kTrain, kEval };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

// Per-forward scratch needed by the backward pass.
template <class Real>
struct Workspace {
  std::vector<Tensor<Real>> outputs;                // one per layer
  std::vector<std::vector<std::uint32_t>> argmax;   // maxpool routing
  std::vector<std::vector<Real>> normalized;        // batchnorm x-hat
  std::vector<std::vector<double>> inv_std;         // batchnorm, per channel
  std::vector<std::vector<double>> batch_mean;      // batchnorm, train mode
  std::vector<std::vector<double>> batch_var;       // batchnorm, train mode
  Mode mode = Mode::kEval;
};

template <class Real>
void forward_pass(const ModelSpec& spec, const std::vector<LayerGeometry>& geometry,
                  const LayerParams<Real>& params, const Tensor<Real>& input,
                  Mode mode, Workspace<Real>& ws);

template <class Real>
LayerParams<Real> backward_pass(const ModelSpec& spec,
                                const std::vector<LayerGeometry>& geometry,
                                const LayerParams<Real>& params,
                                const Tensor<Real>& input,
                                const Workspace<Real>& ws,
                                const Tensor<Real>& grad_logits);

// Mean softmax cross-entropy over the batch, accumulated in double. When
// grad is non-null it receives dLoss/dLogits.
template <class Real>
double softmax_cross_entropy(const Tensor<Real>& logits,
                             std::span<const std::int32_t> labels,
                             Tensor<Real>* grad);

template <class Real>
struct LossAndGradients {
  double loss = 0.0;
  LayerParams<Real> grads;
  Workspace<Real> workspace;
};

template <class Real>
LossAndGradients<Real> loss_and_gradients(const ModelSpec& spec,
                                          const std::vector<LayerGeometry>& geometry,
                                          const LayerParams<Real>& params,
                                          const Tensor<Real>& input,
                                          std::span<const std::int32_t> labels,
                                          Mode mode);

template <class Real>
double loss_only(const ModelSpec& spec, const std::vector<LayerGeometry>& geometry,
                 const LayerParams<Real>& params, const Tensor<Real>& input,
                 std::span<const std::int32_t> labels, Mode mode);

#define FEDCMD_ENGINE_EXTERN(Real)                                              \
  extern template void forward_pass<Real>(                                      \
      const ModelSpec&, const std::vector<LayerGeometry>&,                      \
      const LayerParams<Real>&, const Tensor<Real>&, Mode, Workspace<Real>&);   \
  extern template LayerParams<Real> backward_pass<Real>(                        \
      const ModelSpec&, const std::vector<LayerGeometry>&,                      \
      const LayerParams<Real>&, const Tensor<Real>&, const Workspace<Real>&,    \
      const Tensor<Real>&);                                                     \
  extern template double softmax_cross_entropy<Real>(                           \
      const Tensor<Real>&, std::span<const std::int32_t>, Tensor<Real>*);       \
  extern template LossAndGradients<Real> loss_and_gradients<Real>(              \
      const ModelSpec&, const std::vector<LayerGeometry>&,                      \
      const LayerParams<Real>&, const Tensor<Real>&,                            \
      std::span<const std::int32_t>, Mode);                                     \
  extern template double loss_only<Real>(                                       \
      const ModelSpec&, const std::vector<LayerGeometry>&,                      \
      const LayerParams<Real>&, const Tensor<Real>&,                            \
      std::span<const std::int32_t>, Mode);

FEDCMD_ENGINE_EXTERN(float)
FEDCMD_ENGINE_EXTERN(double)
#undef FEDCMD_ENGINE_EXTERN

}  // namespace fedcmd::nn
