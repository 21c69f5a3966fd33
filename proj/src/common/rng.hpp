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
#include <initializer_list>
#include <random>
#include <vector>

namespace fedcmd {

// SplitMix64 finalizer; used to fan a master seed out into independent
// streams.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Derives a child seed from a parent seed and a sequence of tags. The result
// depends on the order of tags.
std::uint64_t derive_seed(std::uint64_t parent,
                          std::initializer_list<std::uint64_t> tags) noexcept;

// Seed-stream tags. Values are part of the reproducibility contract.
namespace seed_tag {
inline constexpr std::uint64_t kInit = 0x696e6974;      // "init"
inline constexpr std::uint64_t kData = 0x64617461;      // "data"
inline constexpr std::uint64_t kClient = 0x636c6e74;    // "clnt"
inline constexpr std::uint64_t kSampling = 0x73616d70;  // "samp"
inline constexpr std::uint64_t kShuffle = 0x73687566;   // "shuf"
inline constexpr std::uint64_t kSplit = 0x73706c74;     // "splt"
}  // namespace seed_tag

// Deterministic generator. Distribution code is written here rather than
// taken from <random> because the standard distributions are
// implementation-defined; std::mt19937_64 itself is fully specified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();

  // Uniform in (0, 1).
  double uniform_open();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Marsaglia-Tsang; shape > 0, unit scale.
  double gamma(double shape);

  template <class T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fedcmd
