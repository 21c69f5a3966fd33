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

#include "nn/architectures.hpp"

#include <string>

#include "common/error.hpp"

namespace fedcmd::nn {
namespace {

void conv_block(ModelSpec& spec, const std::string& name, int in, int out) {
  spec.layers.push_back(conv2d(name, in, out, 5, 1, 0));
  spec.layers.push_back(batchnorm(name + ".bn"));
  spec.layers.push_back(relu(name + ".relu"));
}

void fc_block(ModelSpec& spec, const std::string& name, int out) {
  spec.layers.push_back(dense(name, out));
  spec.layers.push_back(relu(name + ".relu"));
}

ModelSpec lenet_trunk(const Shape& input, const std::vector<int>& fc, int num_classes) {
  if (input.size() != 3) fail(ErrorCode::kShape, "LeNet5 expects a CxHxW input, got " + shape_string(input));
  ModelSpec spec;
  spec.input = input;
  conv_block(spec, "conv1", input[0], 6);
  conv_block(spec, "conv2", 6, 16);
  spec.layers.push_back(maxpool2d("pool", 2, 2));
  spec.layers.push_back(flatten("flatten"));
  for (std::size_t i = 0; i < fc.size(); ++i) fc_block(spec, "fc" + std::to_string(i + 1), fc[i]);
  spec.layers.push_back(dense("classifier", num_classes));
  return spec;
}

}  // namespace

ModelSpec lenet5(const Shape& input, int num_classes) {
  return lenet_trunk(input, {120, 84}, num_classes);
}

ModelSpec lenet5_one_fc(const Shape& input, int num_classes) {
  return lenet_trunk(input, {120}, num_classes);
}

ModelSpec lenet5_three_fc(const Shape& input, int num_classes) {
  return lenet_trunk(input, {120, 84, 64}, num_classes);
}

ModelSpec mlp(const Shape& input, const std::vector<int>& hidden, int num_classes) {
  ModelSpec spec;
  spec.input = input;
  if (input.size() != 1) spec.layers.push_back(flatten("flatten"));
  for (std::size_t i = 0; i < hidden.size(); ++i) fc_block(spec, "fc" + std::to_string(i + 1), hidden[i]);
  spec.layers.push_back(dense("classifier", num_classes));
  return spec;
}

bool is_known_architecture(std::string_view id) {
  return id == "lenet5" || id == "lenet5_one_fc" || id == "lenet5_three_fc" || id == "mlp";
}

ModelSpec architecture(std::string_view id, const Shape& input, int num_classes,
                       const std::vector<int>& hidden) {
  if (id == "lenet5") return lenet5(input, num_classes);
  if (id == "lenet5_one_fc") return lenet5_one_fc(input, num_classes);
  if (id == "lenet5_three_fc") return lenet5_three_fc(input, num_classes);
  if (id == "mlp") return mlp(input, hidden, num_classes);
  fail(ErrorCode::kConfig, "unknown model '" + std::string(id) +
                               "' (expected lenet5, lenet5_one_fc, lenet5_three_fc or mlp)");
}

}  // namespace fedcmd::nn
