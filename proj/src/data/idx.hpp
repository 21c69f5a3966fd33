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

#include <filesystem>

#include "data/dataset.hpp"

namespace fedcmd::data {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;  // ubyte, 3 dims
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;  // ubyte, 1 dim

// Loads an image/label IDX pair. Pixels are scaled to [0, 1]; the sample
// shape is 1xHxW; num_classes is max(label) + 1.
// Errors: kIo (missing file), kFormat (bad magic, names the file),
// kTruncated, kCountMismatch.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// Inverse of load_idx for datasets with a 1xHxW or HxW sample shape. Values
// are quantized with round(v * 255), so datasets that came from IDX files
// round-trip exactly.
void write_idx(const Dataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels);

}  // namespace fedcmd::data
