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

#include "nn/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"

namespace fedcmd::nn {
namespace {

struct ConvDims {
  int c, h, w, oc, oh, ow, k, s, p;
};

ConvDims conv_dims(const LayerSpec& l, const LayerGeometry& g) {
  return {g.in[0], g.in[1], g.in[2], g.out[0], g.out[1], g.out[2],
          l.kernel, l.stride, l.pad};
}

template <class Real>
void conv_forward(const ConvDims& d, int batch, const Real* x, const Real* w,
                  Real* out) {
  const Real* bias = w + static_cast<std::size_t>(d.oc) * d.c * d.k * d.k;
  const std::size_t in_plane = static_cast<std::size_t>(d.h) * d.w;
  const std::size_t out_plane = static_cast<std::size_t>(d.oh) * d.ow;
  for (int n = 0; n < batch; ++n) {
    for (int oc = 0; oc < d.oc; ++oc) {
      Real* o = out + (static_cast<std::size_t>(n) * d.oc + oc) * out_plane;
      std::fill(o, o + out_plane, bias[oc]);
      for (int c = 0; c < d.c; ++c) {
        const Real* xin = x + (static_cast<std::size_t>(n) * d.c + c) * in_plane;
        for (int ky = 0; ky < d.k; ++ky) {
          for (int kx = 0; kx < d.k; ++kx) {
            const Real wv = w[((static_cast<std::size_t>(oc) * d.c + c) * d.k + ky) * d.k + kx];
            for (int oy = 0; oy < d.oh; ++oy) {
              const int iy = oy * d.s + ky - d.p;
              if (iy < 0 || iy >= d.h) continue;
              Real* orow = o + static_cast<std::size_t>(oy) * d.ow;
              const Real* xrow = xin + static_cast<std::size_t>(iy) * d.w;
              for (int ox = 0; ox < d.ow; ++ox) {
                const int ix = ox * d.s + kx - d.p;
                if (ix < 0 || ix >= d.w) continue;
                orow[ox] += wv * xrow[ix];
              }
            }
          }
        }
      }
    }
  }
}

template <class Real>
void conv_backward(const ConvDims& d, int batch, const Real* x, const Real* w,
                   const Real* dout, Real* gw, Real* din) {
  Real* gb = gw + static_cast<std::size_t>(d.oc) * d.c * d.k * d.k;
  const std::size_t in_plane = static_cast<std::size_t>(d.h) * d.w;
  const std::size_t out_plane = static_cast<std::size_t>(d.oh) * d.ow;
  for (int n = 0; n < batch; ++n) {
    for (int oc = 0; oc < d.oc; ++oc) {
      const Real* g = dout + (static_cast<std::size_t>(n) * d.oc + oc) * out_plane;
      Real bsum = 0;
      for (std::size_t i = 0; i < out_plane; ++i) bsum += g[i];
      gb[oc] += bsum;
      for (int c = 0; c < d.c; ++c) {
        const std::size_t in_off = (static_cast<std::size_t>(n) * d.c + c) * in_plane;
        const Real* xin = x + in_off;
        Real* dx = din ? din + in_off : nullptr;
        for (int ky = 0; ky < d.k; ++ky) {
          for (int kx = 0; kx < d.k; ++kx) {
            const std::size_t widx = ((static_cast<std::size_t>(oc) * d.c + c) * d.k + ky) * d.k + kx;
            const Real wv = w[widx];
            Real acc = 0;
            for (int oy = 0; oy < d.oh; ++oy) {
              const int iy = oy * d.s + ky - d.p;
              if (iy < 0 || iy >= d.h) continue;
              for (int ox = 0; ox < d.ow; ++ox) {
                const int ix = ox * d.s + kx - d.p;
                if (ix < 0 || ix >= d.w) continue;
                const Real gv = g[static_cast<std::size_t>(oy) * d.ow + ox];
                const std::size_t xi = static_cast<std::size_t>(iy) * d.w + ix;
                acc += gv * xin[xi];
                if (dx) dx[xi] += wv * gv;
              }
            }
            gw[widx] += acc;
          }
        }
      }
    }
  }
}

template <class Real>
void dense_forward(int batch, int in, int out_features, const Real* x,
                   const Real* w, Real* out) {
  const Real* bias = w + static_cast<std::size_t>(out_features) * in;
  for (int n = 0; n < batch; ++n) {
    const Real* xi = x + static_cast<std::size_t>(n) * in;
    Real* o = out + static_cast<std::size_t>(n) * out_features;
    for (int j = 0; j < out_features; ++j) {
      const Real* row = w + static_cast<std::size_t>(j) * in;
      Real acc = bias[j];
      for (int i = 0; i < in; ++i) acc += row[i] * xi[i];
      o[j] = acc;
    }
  }
}

template <class Real>
void dense_backward(int batch, int in, int out_features, const Real* x,
                    const Real* w, const Real* dout, Real* gw, Real* din) {
  Real* gb = gw + static_cast<std::size_t>(out_features) * in;
  for (int n = 0; n < batch; ++n) {
    const Real* xi = x + static_cast<std::size_t>(n) * in;
    const Real* g = dout + static_cast<std::size_t>(n) * out_features;
    Real* dx = din ? din + static_cast<std::size_t>(n) * in : nullptr;
    for (int j = 0; j < out_features; ++j) {
      const Real gv = g[j];
      gb[j] += gv;
      Real* grow = gw + static_cast<std::size_t>(j) * in;
      const Real* row = w + static_cast<std::size_t>(j) * in;
      for (int i = 0; i < in; ++i) {
        grow[i] += gv * xi[i];
        if (dx) dx[i] += row[i] * gv;
      }
    }
  }
}

template <class Real>
void maxpool_forward(const LayerSpec& l, const LayerGeometry& g, int batch,
                     const Real* x, Real* out, std::vector<std::uint32_t>& argmax) {
  const int c = g.in[0], h = g.in[1], w = g.in[2];
  const int oh = g.out[1], ow = g.out[2];
  argmax.assign(static_cast<std::size_t>(batch) * c * oh * ow, 0);
  std::size_t o = 0;
  for (int n = 0; n < batch; ++n) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t base = (static_cast<std::size_t>(n) * c + ch) * h * w;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, ++o) {
          std::size_t best = base + static_cast<std::size_t>(oy * l.stride) * w + ox * l.stride;
          for (int ky = 0; ky < l.kernel; ++ky) {
            for (int kx = 0; kx < l.kernel; ++kx) {
              const std::size_t idx = base + static_cast<std::size_t>(oy * l.stride + ky) * w +
                                      (ox * l.stride + kx);
              if (x[idx] > x[best]) best = idx;
            }
          }
          out[o] = x[best];
          argmax[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
}

template <class Real>
void batchnorm_forward(const LayerGeometry& g, int batch, const Real* x,
                       const std::vector<Real>& p, Mode mode, Real* out,
                       Workspace<Real>& ws, std::size_t l) {
  const int channels = g.in[0];
  const std::size_t spatial = shape_size(g.in) / channels;
  const double count = static_cast<double>(batch) * spatial;
  auto& xhat = ws.normalized[l];
  auto& inv_std = ws.inv_std[l];
  auto& bmean = ws.batch_mean[l];
  auto& bvar = ws.batch_var[l];
  xhat.assign(static_cast<std::size_t>(batch) * channels * spatial, Real(0));
  inv_std.assign(channels, 0.0);
  bmean.assign(channels, 0.0);
  bvar.assign(channels, 0.0);

  for (int c = 0; c < channels; ++c) {
    double mean = 0.0;
    double var = 0.0;
    if (mode == Mode::kTrain) {
      for (int n = 0; n < batch; ++n) {
        const Real* xs = x + (static_cast<std::size_t>(n) * channels + c) * spatial;
        for (std::size_t s = 0; s < spatial; ++s) mean += xs[s];
      }
      mean /= count;
      for (int n = 0; n < batch; ++n) {
        const Real* xs = x + (static_cast<std::size_t>(n) * channels + c) * spatial;
        for (std::size_t s = 0; s < spatial; ++s) {
          const double dv = xs[s] - mean;
          var += dv * dv;
        }
      }
      var /= count;
    } else {
      mean = p[2 * channels + c];
      var = p[3 * channels + c];
    }
    bmean[c] = mean;
    bvar[c] = var;
    const double inv = 1.0 / std::sqrt(var + kBatchNormEps);
    inv_std[c] = inv;
    const Real gamma = p[c];
    const Real beta = p[channels + c];
    for (int n = 0; n < batch; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * channels + c) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) {
        const Real xh = static_cast<Real>((x[off + s] - mean) * inv);
        xhat[off + s] = xh;
        out[off + s] = gamma * xh + beta;
      }
    }
  }
}

template <class Real>
void batchnorm_backward(const LayerGeometry& g, int batch, const std::vector<Real>& p,
                        Mode mode, const Workspace<Real>& ws, std::size_t l,
                        const Real* dout, Real* gp, Real* din) {
  const int channels = g.in[0];
  const std::size_t spatial = shape_size(g.in) / channels;
  const double count = static_cast<double>(batch) * spatial;
  const auto& xhat = ws.normalized[l];
  for (int c = 0; c < channels; ++c) {
    double dgamma = 0.0;
    double dbeta = 0.0;
    for (int n = 0; n < batch; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * channels + c) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) {
        dgamma += static_cast<double>(dout[off + s]) * xhat[off + s];
        dbeta += dout[off + s];
      }
    }
    gp[c] += static_cast<Real>(dgamma);
    gp[channels + c] += static_cast<Real>(dbeta);
    if (!din) continue;
    const double gamma = p[c];
    const double inv = ws.inv_std[l][c];
    for (int n = 0; n < batch; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * channels + c) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) {
        const double dxhat = dout[off + s] * gamma;
        if (mode == Mode::kTrain) {
          din[off + s] += static_cast<Real>(
              inv / count * (count * dxhat - gamma * dbeta - xhat[off + s] * gamma * dgamma));
        } else {
          din[off + s] += static_cast<Real>(dxhat * inv);
        }
      }
    }
  }
}

}  // namespace

template <class Real>
void forward_pass(const ModelSpec& spec, const std::vector<LayerGeometry>& geometry,
                  const LayerParams<Real>& params, const Tensor<Real>& input,
                  Mode mode, Workspace<Real>& ws) {
  if (input.shape != spec.input)
    fail(ErrorCode::kShape, "input batch has sample shape " + shape_string(input.shape) +
                                 ", expected " + shape_string(spec.input));
  if (input.data.size() != static_cast<std::size_t>(input.batch) * input.sample_size())
    fail(ErrorCode::kShape, "input batch buffer size does not match its shape");

  const std::size_t layers = spec.layers.size();
  ws.outputs.assign(layers, Tensor<Real>{});
  ws.argmax.assign(layers, {});
  ws.normalized.assign(layers, {});
  ws.inv_std.assign(layers, {});
  ws.batch_mean.assign(layers, {});
  ws.batch_var.assign(layers, {});
  ws.mode = mode;

  const int batch = input.batch;
  const Tensor<Real>* in = &input;
  for (std::size_t l = 0; l < layers; ++l) {
    const LayerSpec& layer = spec.layers[l];
    const LayerGeometry& g = geometry[l];
    Tensor<Real>& out = ws.outputs[l];
    out = Tensor<Real>(batch, g.out);
    const Real* x = in->data.data();
    switch (layer.kind) {
      case LayerKind::kConv2d:
        conv_forward(conv_dims(layer, g), batch, x, params[l].data(), out.data.data());
        break;
      case LayerKind::kDense:
        dense_forward(batch, g.in[0], g.out[0], x, params[l].data(), out.data.data());
        break;
      case LayerKind::kMaxPool2d:
        maxpool_forward(layer, g, batch, x, out.data.data(), ws.argmax[l]);
        break;
      case LayerKind::kFlatten:
        std::copy(in->data.begin(), in->data.end(), out.data.begin());
        break;
      case LayerKind::kRelu:
        for (std::size_t i = 0; i < out.data.size(); ++i)
          out.data[i] = x[i] <= Real(0) ? Real(0) : x[i];  // NaN propagates
        break;
      case LayerKind::kBatchNorm:
        batchnorm_forward(g, batch, x, params[l], mode, out.data.data(), ws, l);
        break;
    }
    in = &out;
  }
}

template <class Real>
LayerParams<Real> backward_pass(const ModelSpec& spec,
                                const std::vector<LayerGeometry>& geometry,
                                const LayerParams<Real>& params,
                                const Tensor<Real>& input,
                                const Workspace<Real>& ws,
                                const Tensor<Real>& grad_logits) {
  const std::size_t layers = spec.layers.size();
  LayerParams<Real> grads(layers);
  for (std::size_t l = 0; l < layers; ++l) grads[l].assign(geometry[l].param_count, Real(0));

  const int batch = input.batch;
  std::vector<Real> grad = grad_logits.data;
  for (std::size_t li = layers; li-- > 0;) {
    const LayerSpec& layer = spec.layers[li];
    const LayerGeometry& g = geometry[li];
    const Real* x = li == 0 ? input.data.data() : ws.outputs[li - 1].data.data();
    const bool need_input_grad = li > 0;
    std::vector<Real> din;
    if (need_input_grad) din.assign(static_cast<std::size_t>(batch) * shape_size(g.in), Real(0));
    Real* dx = need_input_grad ? din.data() : nullptr;

    switch (layer.kind) {
      case LayerKind::kConv2d:
        conv_backward(conv_dims(layer, g), batch, x, params[li].data(), grad.data(),
                      grads[li].data(), dx);
        break;
      case LayerKind::kDense:
        dense_backward(batch, g.in[0], g.out[0], x, params[li].data(), grad.data(),
                       grads[li].data(), dx);
        break;
      case LayerKind::kMaxPool2d:
        if (dx) {
          const auto& route = ws.argmax[li];
          for (std::size_t i = 0; i < route.size(); ++i) dx[route[i]] += grad[i];
        }
        break;
      case LayerKind::kFlatten:
        if (dx) std::copy(grad.begin(), grad.end(), dx);
        break;
      case LayerKind::kRelu:
        if (dx) {
          for (std::size_t i = 0; i < grad.size(); ++i)
            dx[i] = x[i] <= Real(0) ? Real(0) : grad[i];
        }
        break;
      case LayerKind::kBatchNorm:
        batchnorm_backward(g, batch, params[li], ws.mode, ws, li, grad.data(),
                           grads[li].data(), dx);
        break;
    }
    if (need_input_grad) grad = std::move(din);
  }
  return grads;
}

template <class Real>
double softmax_cross_entropy(const Tensor<Real>& logits,
                             std::span<const std::int32_t> labels,
                             Tensor<Real>* grad) {
  const int batch = logits.batch;
  const std::size_t classes = logits.sample_size();
  if (labels.size() != static_cast<std::size_t>(batch))
    fail(ErrorCode::kShape, "label count " + std::to_string(labels.size()) +
                                 " does not match batch size " + std::to_string(batch));
  if (grad) *grad = Tensor<Real>(batch, logits.shape);
  double total = 0.0;
  for (int n = 0; n < batch; ++n) {
    const std::int32_t y = labels[n];
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      fail(ErrorCode::kInvalidArgument, "label " + std::to_string(y) + " outside [0, " +
                                            std::to_string(classes) + ")");
    const Real* z = logits.data.data() + static_cast<std::size_t>(n) * classes;
    double zmax = z[0];
    for (std::size_t k = 1; k < classes; ++k) zmax = std::max(zmax, static_cast<double>(z[k]));
    double sum = 0.0;
    for (std::size_t k = 0; k < classes; ++k) sum += std::exp(z[k] - zmax);
    const double lse = zmax + std::log(sum);
    total += lse - z[y];
    if (grad) {
      Real* gz = grad->data.data() + static_cast<std::size_t>(n) * classes;
      for (std::size_t k = 0; k < classes; ++k) {
        double pk = std::exp(z[k] - lse);
        if (static_cast<std::int32_t>(k) == y) pk -= 1.0;
        gz[k] = static_cast<Real>(pk / batch);
      }
    }
  }
  return total / batch;
}

template <class Real>
LossAndGradients<Real> loss_and_gradients(const ModelSpec& spec,
                                          const std::vector<LayerGeometry>& geometry,
                                          const LayerParams<Real>& params,
                                          const Tensor<Real>& input,
                                          std::span<const std::int32_t> labels,
                                          Mode mode) {
  LossAndGradients<Real> result;
  forward_pass(spec, geometry, params, input, mode, result.workspace);
  Tensor<Real> grad_logits;
  result.loss = softmax_cross_entropy(result.workspace.outputs.back(), labels, &grad_logits);
  result.grads = backward_pass(spec, geometry, params, input, result.workspace, grad_logits);
  return result;
}

template <class Real>
double loss_only(const ModelSpec& spec, const std::vector<LayerGeometry>& geometry,
                 const LayerParams<Real>& params, const Tensor<Real>& input,
                 std::span<const std::int32_t> labels, Mode mode) {
  Workspace<Real> ws;
  forward_pass(spec, geometry, params, input, mode, ws);
  return softmax_cross_entropy<Real>(ws.outputs.back(), labels, nullptr);
}

#define FEDCMD_ENGINE_INSTANTIATE(Real)                                         \
  template void forward_pass<Real>(                                             \
      const ModelSpec&, const std::vector<LayerGeometry>&,                      \
      const LayerParams<Real>&, const Tensor<Real>&, Mode, Workspace<Real>&);   \
  template LayerParams<Real> backward_pass<Real>(                               \
      const ModelSpec&, const std::vector<LayerGeometry>&,                      \
      const LayerParams<Real>&, const Tensor<Real>&, const Workspace<Real>&,    \
      const Tensor<Real>&);                                                     \
  template double softmax_cross_entropy<Real>(                                  \
      const Tensor<Real>&, std::span<const std::int32_t>, Tensor<Real>*);       \
  template LossAndGradients<Real> loss_and_gradients<Real>(                     \
      const ModelSpec&, const std::vector<LayerGeometry>&,                      \
      const LayerParams<Real>&, const Tensor<Real>&,                            \
      std::span<const std::int32_t>, Mode);                                     \
  template double loss_only<Real>(                                              \
      const ModelSpec&, const std::vector<LayerGeometry>&,                      \
      const LayerParams<Real>&, const Tensor<Real>&,                            \
      std::span<const std::int32_t>, Mode);

FEDCMD_ENGINE_INSTANTIATE(float)
FEDCMD_ENGINE_INSTANTIATE(double)

}  // namespace fedcmd::nn
