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
#include <string>
#include <vector>

namespace fedcmd::cli {

// Reads run reports and writes comparison.md, accuracy_vs_round.csv,
// cumulative_bytes.csv and per_class_accuracy.csv into out_dir. Reports
// must share a dataset descriptor (kConfig otherwise). Returns the markdown.
std::string compare_reports(const std::vector<std::filesystem::path>& reports,
                            const std::filesystem::path& out_dir);

}  // namespace fedcmd::cli
