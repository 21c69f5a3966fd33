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
#include <filesystem>
#include <string>
#include <vector>

#include "nn/model.hpp"

namespace fedcmd::nn {

// Layout (all integers little-endian):
//   char[8]  magic "FCMDCKPT"
//   u32      version (1)
//   u64      spec digest, see spec_digest()
//   u64      init seed
//   u32      layer count
//   per layer in spec order: u64 value count, then that many f32 values
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Model& model);

// Rebuilds against the caller's spec; a digest mismatch is a kFormat error.
Model decode_checkpoint(const std::vector<std::uint8_t>& bytes, const ModelSpec& spec);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path, const ModelSpec& spec);

}  // namespace fedcmd::nn
