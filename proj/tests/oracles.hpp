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

// Reference implementations used by the unit and acceptance tests. They are
// written directly from the defining formulas, without reusing library code
// paths, so agreement with the library means something.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "featdist/gaussian.hpp"
#include "nn/engine.hpp"
#include "nn/layer_spec.hpp"

namespace fedcmd::oracle {

// ---- Wasserstein-2 by quantile coupling --------------------------------

// Standard normal upper tail P(Z > z).
inline double normal_upper(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Inverse of the standard normal CDF by Acklam's rational approximation
// refined with Halley steps against erfc. p in (0, 1).
inline double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double lo = 0.02425;
  double x;
  if (p < lo) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p > 1 - lo) {
    const double q = std::sqrt(-2 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  }
  for (int i = 0; i < 2; ++i) {
    const double e = normal_upper(-x) - p;  // Phi(x) - p without cancellation
    const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
    x = x - u / (1 + x * u / 2);
  }
  return x;
}

// Quantile function of N(mu, sigma^2), evaluated from a probability.
inline double gaussian_quantile(double mu, double sigma, double p) { return mu + sigma * normal_quantile(p); }

// W2 = sqrt(int_0^1 (F_a^-1(q) - F_b^-1(q))^2 dq). The q-integral is
// evaluated after substituting q = Phi(t), which removes the endpoint
// singularities; trapezoid rule on t in [-10, 10] with `points` nodes.
inline double w2_quantile_integral(const featdist::GaussianSummary& a, const featdist::GaussianSummary& b,
                                   int points = 100000) {
  const double lo = -10.0, hi = 10.0;
  const double h = (hi - lo) / (points - 1);
  double sum = 0.0;
  for (int i = 0; i < points; ++i) {
    const double t = lo + h * i;
    // Invert through the nearer tail so q never rounds to 1.
    const double z = t <= 0 ? normal_quantile(normal_upper(-t)) : -normal_quantile(normal_upper(t));
    const double dq_dt = std::exp(-t * t / 2) / std::sqrt(2 * M_PI);
    const double diff = (a.mean + a.std * z) - (b.mean + b.std * z);
    const double w = (i == 0 || i == points - 1) ? 0.5 : 1.0;
    sum += w * diff * diff * dq_dt;
  }
  return std::sqrt(sum * h);
}

// ---- Finite-difference gradients ---------------------------------------

struct GradCheck {
  std::size_t params = 0;
  double max_rel_error = 0.0;
  std::string worst_layer;
};

// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
// gradient is zero (e.g. running statistics) from dividing by rounding noise.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

// Compares engine gradients against central differences with step h on a
// random instance in double precision.
inline GradCheck check_gradients(const nn::ModelSpec& spec, int batch, std::uint64_t seed, double h = 1e-4) {
  const auto geometry = nn::infer_geometry(spec);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  nn::LayerParams<double> params(spec.layers.size());
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    params[l].resize(geometry[l].param_count);
    for (auto& v : params[l]) v = u(gen);
    if (spec.layers[l].kind == nn::LayerKind::kBatchNorm) {
      // Keep the running variance positive.
      const std::size_t c = params[l].size() / 4;
      for (std::size_t k = 0; k < c; ++k) params[l][3 * c + k] = 0.5 + std::abs(params[l][3 * c + k]);
    }
  }
  nn::Tensor<double> input(batch, spec.input);
  for (auto& v : input.data) v = u(gen);
  const int classes = geometry.back().out[0];
  std::vector<std::int32_t> labels(static_cast<std::size_t>(batch));
  for (auto& y : labels) y = static_cast<std::int32_t>(gen() % static_cast<std::uint64_t>(classes));

  const auto analytic = nn::loss_and_gradients(spec, geometry, params, input, labels, nn::Mode::kTrain);
  GradCheck out;
  for (std::size_t l = 0; l < params.size(); ++l) {
    for (std::size_t k = 0; k < params[l].size(); ++k) {
      auto plus = params;
      auto minus = params;
      plus[l][k] += h;
      minus[l][k] -= h;
      const double fp = nn::loss_only(spec, geometry, plus, input, labels, nn::Mode::kTrain);
      const double fm = nn::loss_only(spec, geometry, minus, input, labels, nn::Mode::kTrain);
      const double numeric = (fp - fm) / (2 * h);
      const double err = relative_error(analytic.grads[l][k], numeric);
      ++out.params;
      if (err > out.max_rel_error) {
        out.max_rel_error = err;
        out.worst_layer = spec.layers[l].name;
      }
    }
  }
  return out;
}

// Small instances, one per layer kind, each with at most 200 parameters.
// Parameter-free layers sit between parameterized ones so their backward
// rule is exercised.
struct KindCase {
  std::string kind;
  nn::ModelSpec spec;
  int batch;
};

inline std::vector<KindCase> gradient_cases() {
  using namespace nn;
  std::vector<KindCase> cases;
  cases.push_back({"dense", {{6}, {dense("fc1", 5), dense("classifier", 3)}}, 8});
  cases.push_back({"relu", {{6}, {dense("fc1", 6), relu("fc1.relu"), dense("classifier", 3)}}, 8});
  cases.push_back({"conv2d", {{1, 6, 6}, {conv2d("conv1", 1, 2, 3, 1, 1), flatten("flat"), dense("classifier", 2)}}, 4});
  cases.push_back({"maxpool2d",
                   {{1, 6, 6}, {conv2d("conv1", 1, 2, 3), maxpool2d("pool", 2, 2), flatten("flat"), dense("classifier", 3)}},
                   4});
  cases.push_back({"flatten", {{2, 3, 3}, {flatten("flat"), dense("classifier", 4)}}, 4});
  cases.push_back({"batchnorm",
                   {{1, 5, 5}, {conv2d("conv1", 1, 3, 3), batchnorm("conv1.bn"), relu("conv1.relu"), flatten("flat"),
                                dense("classifier", 3)}},
                   6});
  return cases;
}

// ---- Aggregation -------------------------------------------------------

inline double naive_cosine(const std::vector<float>& a, const std::vector<float>& b, double eps) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += static_cast<double>(a[k]) * static_cast<double>(b[k]);
    na += static_cast<double>(a[k]) * static_cast<double>(a[k]);
    nb += static_cast<double>(b[k]) * static_cast<double>(b[k]);
  }
  double v = dot / (std::sqrt(na) * std::sqrt(nb) + eps);
  if (v < 0) v = 0;
  if (v > 1) v = 1;
  return v;
}

// Row-major n x n over the map's (ascending) client order.
inline std::vector<double> naive_similarity(const std::map<int, std::vector<float>>& heads, double eps) {
  std::vector<const std::vector<float>*> rows;
  for (const auto& [id, h] : heads) rows.push_back(&h);
  const std::size_t n = rows.size();
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = naive_cosine(*rows[i], *rows[j], eps);
  return out;
}

// omega_i' = (1 / sum_j Phi_ij) * sum_j Phi_ij omega_j, coordinate by
// coordinate.
inline std::map<int, std::vector<float>> naive_weighted_update(const std::map<int, std::vector<float>>& bodies,
                                                               const std::vector<double>& phi) {
  std::vector<int> ids;
  for (const auto& [id, b] : bodies) ids.push_back(id);
  const std::size_t n = ids.size();
  std::map<int, std::vector<float>> out;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0;
    for (std::size_t j = 0; j < n; ++j) row += phi[i * n + j];
    const std::size_t len = bodies.at(ids[i]).size();
    std::vector<float> r(len);
    for (std::size_t k = 0; k < len; ++k) {
      double s = 0;
      for (std::size_t j = 0; j < n; ++j) s += phi[i * n + j] * static_cast<double>(bodies.at(ids[j])[k]);
      r[k] = static_cast<float>((1.0 / row) * s);
    }
    out[ids[i]] = r;
  }
  return out;
}

}  // namespace fedcmd::oracle
