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

#include "fl/simulator.hpp"
#include "json.hpp"

namespace fedcmd::fl {

inline constexpr const char* kReportFormat = "fedcmd-run-report";
inline constexpr int kReportVersion = 1;

nlohmann::ordered_json config_to_json(const RunConfig& config);

nlohmann::ordered_json report_json(const RunResult& result);
std::string report_text(const RunResult& result);

// round,phase,sampled_clients,mean_accuracy,std_accuracy,mean_train_loss,
// bytes_up,bytes_down,similarity_probe_bytes,cumulative_bytes,winner
std::string rounds_csv(const RunResult& result);

// report.json, rounds.csv and, when recorded, similarity/round_NNNN.csv.
void write_run_outputs(const RunResult& result, const std::filesystem::path& dir);

}  // namespace fedcmd::fl
