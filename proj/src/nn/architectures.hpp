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

#include <string_view>
#include <vector>

#include "nn/layer_spec.hpp"

namespace fedcmd::nn {

// LeNet5 family. Each Conv2D block is conv -> batchnorm -> ReLU; the block's
// sub-layers are named "<conv>.bn" and "<conv>.relu". Parameterized trunk
// layers are conv1, conv2, fc1.., and the output layer is "classifier".
// input is CxHxW.
ModelSpec lenet5(const Shape& input, int num_classes);            // fc1, fc2
ModelSpec lenet5_one_fc(const Shape& input, int num_classes);     // fc1
ModelSpec lenet5_three_fc(const Shape& input, int num_classes);   // fc1, fc2, fc3

// Dense-only net: fc1..fcN with ReLU, then classifier. Any input shape is
// flattened first when it is not already flat.
ModelSpec mlp(const Shape& input, const std::vector<int>& hidden, int num_classes);

// Ids: "lenet5", "lenet5_one_fc", "lenet5_three_fc", "mlp".
ModelSpec architecture(std::string_view id, const Shape& input, int num_classes,
                       const std::vector<int>& hidden);

bool is_known_architecture(std::string_view id);

}  // namespace fedcmd::nn
