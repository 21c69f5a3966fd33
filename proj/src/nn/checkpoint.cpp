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

#include "nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "common/error.hpp"

namespace fedcmd::nn {
namespace {

constexpr char kMagic[8] = {'F', 'C', 'M', 'D', 'C', 'K', 'P', 'T'};

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <class T>
  T get_le() {
    need(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return value;
  }

  void get_raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(ErrorCode::kTruncated, "checkpoint is truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Model& model) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, spec_digest(model.spec()));
  put_le<std::uint64_t>(out, model.seed());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.num_layers()));
  for (const auto& layer : model.params()) {
    put_le<std::uint64_t>(out, layer.size());
    for (float v : layer) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Model decode_checkpoint(const std::vector<std::uint8_t>& bytes, const ModelSpec& spec) {
  Reader in(bytes);
  char magic[8];
  in.get_raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) fail(ErrorCode::kFormat, "not a checkpoint (bad magic)");
  const auto version = in.get_le<std::uint32_t>();
  if (version != kCheckpointVersion)
    fail(ErrorCode::kFormat, "unsupported checkpoint version " + std::to_string(version));
  const auto digest = in.get_le<std::uint64_t>();
  if (digest != spec_digest(spec)) fail(ErrorCode::kFormat, "checkpoint spec digest does not match the model spec");
  const auto seed = in.get_le<std::uint64_t>();
  const auto layers = in.get_le<std::uint32_t>();
  if (layers != spec.layers.size()) fail(ErrorCode::kFormat, "checkpoint layer count mismatch");
  LayerParams<float> params(layers);
  for (auto& layer : params) {
    const auto count = in.get_le<std::uint64_t>();
    if (count > bytes.size()) fail(ErrorCode::kTruncated, "checkpoint is truncated");
    layer.resize(count);
    for (auto& v : layer) v = std::bit_cast<float>(in.get_le<std::uint32_t>());
  }
  if (!in.done()) fail(ErrorCode::kFormat, "trailing bytes after checkpoint payload");
  return Model(spec, std::move(params), seed);
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

Model load_checkpoint(const std::filesystem::path& path, const ModelSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, spec);
}

}  // namespace fedcmd::nn
