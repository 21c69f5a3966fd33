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

#include "cli/compare.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "common/error.hpp"
#include "fl/report.hpp"
#include "json.hpp"

namespace fedcmd::cli {

namespace {

using json = nlohmann::json;

struct Loaded {
  std::string label;
  json doc;
};

Loaded read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open report " + path.string());
  Loaded l;
  try {
    l.doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, "report " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!l.doc.is_object() || l.doc.value("format", "") != fl::kReportFormat)
    fail(ErrorCode::kFormat, path.string() + " is not a run report");
  // Output directories are usually named after the run.
  l.label = path.filename() == "report.json" && path.has_parent_path() ? path.parent_path().filename().string()
                                                                        : path.stem().string();
  return l;
}

std::string fmt(double v, const char* spec = "%.10g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

}  // namespace

std::string compare_reports(const std::vector<std::filesystem::path>& paths, const std::filesystem::path& out_dir) {
  if (paths.empty()) fail(ErrorCode::kConfig, "report needs at least one run report");
  std::vector<Loaded> reports;
  for (const auto& p : paths) reports.push_back(read_report(p));
  const std::string dataset = reports.front().doc.at("dataset").get<std::string>();
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const auto other = reports[i].doc.at("dataset").get<std::string>();
    if (other != dataset)
      fail(ErrorCode::kConfig, "reports use different datasets: '" + dataset + "' (" + paths.front().string() +
                                   ") vs '" + other + "' (" + paths[i].string() + ")");
  }

  // One row per strategy, in first-seen order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const Loaded*>> by_strategy;
  for (const auto& r : reports) {
    const auto s = r.doc.at("config").at("strategy").get<std::string>();
    if (!by_strategy.count(s)) order.push_back(s);
    by_strategy[s].push_back(&r);
  }

  std::ostringstream md;
  md << "Dataset: " << dataset << "\n\n";
  md << "| strategy | runs | final accuracy (%) | head layer | total bytes |\n";
  md << "|---|---|---|---|---|\n";
  for (const auto& s : order) {
    const auto& runs = by_strategy[s];
    double mean = 0.0, sd = 0.0;
    if (runs.size() == 1) {
      mean = runs[0]->doc.at("final_accuracy").at("mean").get<double>();
      sd = runs[0]->doc.at("final_accuracy").at("std").get<double>();
    } else {
      for (const auto* r : runs) mean += r->doc.at("final_accuracy").at("mean").get<double>();
      mean /= static_cast<double>(runs.size());
      for (const auto* r : runs) {
        const double d = r->doc.at("final_accuracy").at("mean").get<double>() - mean;
        sd += d * d;
      }
      sd = std::sqrt(sd / static_cast<double>(runs.size()));
    }
    std::string heads;
    for (const auto* r : runs) {
      const auto& h = r->doc.at("head_layer");
      const std::string name = h.is_null() ? "-" : h.get<std::string>();
      if (heads.find(name) == std::string::npos) heads += (heads.empty() ? "" : ", ") + name;
    }
    double bytes = 0.0;
    for (const auto* r : runs) bytes += r->doc.at("communication").at("measured_total_bytes").get<double>();
    bytes /= static_cast<double>(runs.size());
    md << "| " << s << " | " << runs.size() << " | " << fmt(100.0 * mean, "%.2f") << " ± "
       << fmt(100.0 * sd, "%.2f") << " | " << heads << " | " << fmt(bytes, "%.0f") << " |\n";
  }
  md << "\nWith several runs per strategy the spread is across runs; with one run it is across clients.\n";

  std::ostringstream acc, bytes, hist;
  acc << "run,strategy,seed,round,mean_accuracy,std_accuracy\n";
  bytes << "run,strategy,seed,round,cumulative_bytes\n";
  hist << "run,strategy,seed,class,test_samples,correct,accuracy,share_pct\n";
  for (const auto& r : reports) {
    const auto& cfg = r.doc.at("config");
    const std::string prefix =
        r.label + "," + cfg.at("strategy").get<std::string>() + "," + std::to_string(cfg.at("seed").get<std::uint64_t>());
    for (const auto& rec : r.doc.at("rounds")) {
      const int round = rec.at("round").get<int>();
      if (!rec.at("mean_accuracy").is_null())
        acc << prefix << ',' << round << ',' << fmt(rec.at("mean_accuracy").get<double>()) << ','
            << fmt(rec.at("std_accuracy").get<double>()) << '\n';
      bytes << prefix << ',' << round << ',' << rec.at("cumulative_bytes").get<std::uint64_t>() << '\n';
    }
    std::uint64_t total = 0;
    for (const auto& c : r.doc.at("per_class_accuracy")) total += c.at("test_samples").get<std::uint64_t>();
    for (const auto& c : r.doc.at("per_class_accuracy")) {
      const auto n = c.at("test_samples").get<std::uint64_t>();
      hist << prefix << ',' << c.at("class").get<int>() << ',' << n << ',' << c.at("correct").get<std::uint64_t>()
           << ',' << fmt(c.at("accuracy").get<double>()) << ','
           << fmt(total ? 100.0 * static_cast<double>(n) / static_cast<double>(total) : 0.0) << '\n';
    }
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());
  write_file(out_dir / "comparison.md", md.str());
  write_file(out_dir / "accuracy_vs_round.csv", acc.str());
  write_file(out_dir / "cumulative_bytes.csv", bytes.str());
  write_file(out_dir / "per_class_accuracy.csv", hist.str());
  return md.str();
}

}  // namespace fedcmd::cli
