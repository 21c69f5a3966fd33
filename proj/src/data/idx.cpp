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

#include "data/idx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <vector>

#include "common/error.hpp"

namespace fedcmd::data {
namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4)
    fail(ErrorCode::kTruncated, "'" + path.string() + "' is truncated in its header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_file(images);
  const auto lab = read_file(labels);

  const auto img_magic = read_be32(img, 0, images);
  if (img_magic != kIdxImagesMagic)
    fail(ErrorCode::kFormat, "'" + images.string() + "' is not an IDX image file (magic " +
                                 std::to_string(img_magic) + ")");
  const auto lab_magic = read_be32(lab, 0, labels);
  if (lab_magic != kIdxLabelsMagic)
    fail(ErrorCode::kFormat, "'" + labels.string() + "' is not an IDX label file (magic " +
                                 std::to_string(lab_magic) + ")");

  const std::uint32_t n_img = read_be32(img, 4, images);
  const std::uint32_t rows = read_be32(img, 8, images);
  const std::uint32_t cols = read_be32(img, 12, images);
  const std::uint32_t n_lab = read_be32(lab, 4, labels);
  if (n_img != n_lab)
    fail(ErrorCode::kCountMismatch, "'" + images.string() + "' holds " + std::to_string(n_img) +
                                        " images but '" + labels.string() + "' holds " +
                                        std::to_string(n_lab) + " labels");
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  if (img.size() < 16 + pixels * n_img)
    fail(ErrorCode::kTruncated, "'" + images.string() + "' is truncated");
  if (lab.size() < 8 + static_cast<std::size_t>(n_lab))
    fail(ErrorCode::kTruncated, "'" + labels.string() + "' is truncated");
  if (n_img == 0) fail(ErrorCode::kFormat, "'" + images.string() + "' contains no samples");

  Dataset out;
  out.sample_shape = {1, static_cast<int>(rows), static_cast<int>(cols)};
  out.inputs.resize(pixels * n_img);
  for (std::size_t i = 0; i < out.inputs.size(); ++i)
    out.inputs[i] = static_cast<float>(img[16 + i]) / 255.0f;
  out.labels.resize(n_lab);
  int max_label = 0;
  for (std::size_t i = 0; i < n_lab; ++i) {
    out.labels[i] = lab[8 + i];
    max_label = std::max(max_label, static_cast<int>(lab[8 + i]));
  }
  out.num_classes = max_label + 1;
  return out;
}

void write_idx(const Dataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels) {
  data.validate();
  const auto& s = data.sample_shape;
  int rows = 0;
  int cols = 0;
  if (s.size() == 3 && s[0] == 1) {
    rows = s[1];
    cols = s[2];
  } else if (s.size() == 2) {
    rows = s[0];
    cols = s[1];
  } else {
    fail(ErrorCode::kInvalidArgument, "IDX images need a 1xHxW or HxW sample shape, got " +
                                          nn::shape_string(s));
  }
  if (data.num_classes > 256) fail(ErrorCode::kInvalidArgument, "IDX labels are single bytes");

  std::ofstream img(images, std::ios::binary | std::ios::trunc);
  if (!img) fail(ErrorCode::kIo, "cannot open '" + images.string() + "' for writing");
  put_be32(img, kIdxImagesMagic);
  put_be32(img, static_cast<std::uint32_t>(data.size()));
  put_be32(img, static_cast<std::uint32_t>(rows));
  put_be32(img, static_cast<std::uint32_t>(cols));
  std::vector<char> pixels(data.inputs.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const float v = std::clamp(data.inputs[i], 0.0f, 1.0f);
    pixels[i] = static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
  }
  img.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));

  std::ofstream lab(labels, std::ios::binary | std::ios::trunc);
  if (!lab) fail(ErrorCode::kIo, "cannot open '" + labels.string() + "' for writing");
  put_be32(lab, kIdxLabelsMagic);
  put_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (auto y : data.labels) lab.put(static_cast<char>(static_cast<std::uint8_t>(y)));
  if (!img || !lab) fail(ErrorCode::kIo, "failed writing IDX files");
}

}  // namespace fedcmd::data
