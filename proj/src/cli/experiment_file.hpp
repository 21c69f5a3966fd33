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
#include <string>

#include "data/dataset.hpp"
#include "fl/config.hpp"

namespace fedcmd::cli {

struct DataSource {
  enum class Kind { kSynthetic, kIdx };
  Kind kind = Kind::kSynthetic;
  int classes = 10;
  int samples_per_class = 500;
  nn::Shape shape = {20};
  double separation = 2.0;
  std::string idx_images;
  std::string idx_labels;

  // Identifies the dataset independently of seeds; reports compare only when
  // their descriptors agree.
  std::string descriptor() const;

  bool operator==(const DataSource&) const = default;
};

struct ExperimentFile {
  fl::RunConfig run;
  DataSource data;
  std::string output_dir = "out";

  bool operator==(const ExperimentFile&) const = default;
};

// "key = value" lines; '#' starts a comment. Throws kConfig with the line
// number and key on unknown keys, duplicates and malformed values.
ExperimentFile parse_experiment(const std::string& text);
ExperimentFile load_experiment(const std::string& path);
// Applies one key as if it appeared in a file; used for command-line overrides.
void apply_setting(ExperimentFile& file, const std::string& key, const std::string& value);
// Writes every key, doubles with 17 significant digits.
std::string serialize_experiment(const ExperimentFile& file);

// Parses "20" or "1x28x28".
nn::Shape parse_shape(const std::string& text);

// Synthetic data is generated from the run's data seed.
data::Dataset load_dataset(const DataSource& source, std::uint64_t data_seed);

}  // namespace fedcmd::cli
