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

// fedcmd: partition datasets, run federated experiments, compare reports.
//
// Exit codes: 0 success, 2 configuration / validation / I/O error,
// 3 numeric failure during training, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedcmd/fedcmd.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int exit_code(fedcmd_status s) {
  switch (s) {
    case FEDCMD_OK: return kExitOk;
    case FEDCMD_ERR_NUMERIC: return kExitNumeric;
    case FEDCMD_ERR_INTERNAL: return kExitInternal;
    default: return kExitConfig;
  }
}

// Thrown to unwind with a status once the message has been printed.
struct Failure {
  int code;
};

void check(fedcmd_status s, const char* what) {
  if (s == FEDCMD_OK) return;
  std::fprintf(stderr, "fedcmd: %s: %s\n", what, fedcmd_last_error());
  throw Failure{exit_code(s)};
}

struct ExperimentDeleter {
  void operator()(fedcmd_experiment* p) const { fedcmd_experiment_free(p); }
};
struct DatasetDeleter {
  void operator()(fedcmd_dataset* p) const { fedcmd_dataset_free(p); }
};
struct PlanDeleter {
  void operator()(fedcmd_plan* p) const { fedcmd_plan_free(p); }
};
struct RunDeleter {
  void operator()(fedcmd_run* p) const { fedcmd_run_free(p); }
};
using Experiment = std::unique_ptr<fedcmd_experiment, ExperimentDeleter>;
using Dataset = std::unique_ptr<fedcmd_dataset, DatasetDeleter>;
using Plan = std::unique_ptr<fedcmd_plan, PlanDeleter>;
using Run = std::unique_ptr<fedcmd_run, RunDeleter>;

std::string take(char* s) {
  std::string out = s ? s : "";
  fedcmd_string_free(s);
  return out;
}

struct Options {
  std::string config;
  std::string plan;
  std::string strategy;
  std::string out;
  long long seed = -1;
  int eval_every = 0;
  int threads = 1;
  bool dry_run = false;
  std::vector<std::string> reports;
};

Experiment load_experiment(const Options& o) {
  fedcmd_experiment* raw = nullptr;
  if (o.config.empty())
    check(fedcmd_experiment_new(&raw), "config");
  else
    check(fedcmd_experiment_load(o.config.c_str(), &raw), "config");
  Experiment exp(raw);
  if (!o.strategy.empty()) check(fedcmd_experiment_set(exp.get(), "strategy", o.strategy.c_str()), "--strategy");
  if (o.seed >= 0) check(fedcmd_experiment_set(exp.get(), "seed", std::to_string(o.seed).c_str()), "--seed");
  if (o.eval_every > 0)
    check(fedcmd_experiment_set(exp.get(), "eval_every", std::to_string(o.eval_every).c_str()), "--eval-every");
  if (!o.out.empty()) check(fedcmd_experiment_set(exp.get(), "output_dir", o.out.c_str()), "--out");
  return exp;
}

Dataset load_dataset(const fedcmd_experiment* exp) {
  fedcmd_dataset* raw = nullptr;
  check(fedcmd_dataset_load(exp, &raw), "dataset");
  return Dataset(raw);
}

std::string output_dir(const fedcmd_experiment* exp) {
  char* s = nullptr;
  check(fedcmd_experiment_output_dir(exp, &s), "output_dir");
  return take(s);
}

int cmd_partition(const Options& o) {
  auto exp = load_experiment(o);
  auto ds = load_dataset(exp.get());
  fedcmd_plan* raw = nullptr;
  check(fedcmd_plan_create(exp.get(), ds.get(), &raw), "partition");
  Plan plan(raw);
  const std::string path = o.plan.empty() ? (std::filesystem::path(output_dir(exp.get())) / "plan.json").string() : o.plan;
  if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  check(fedcmd_plan_save(plan.get(), path.c_str()), "write plan");
  char* hist = nullptr;
  check(fedcmd_plan_histograms(plan.get(), ds.get(), &hist), "histograms");
  std::fputs(take(hist).c_str(), stdout);
  std::printf("wrote %s (%d clients, %zu samples)\n", path.c_str(), fedcmd_plan_num_clients(plan.get()),
              fedcmd_dataset_size(ds.get()));
  return kExitOk;
}

int cmd_run(const Options& o) {
  auto exp = load_experiment(o);
  check(fedcmd_experiment_validate(exp.get()), "config");
  auto ds = load_dataset(exp.get());
  char* formula = nullptr;
  check(fedcmd_predict_communication(exp.get(), ds.get(), &formula), "communication");
  const std::string predicted = take(formula);
  if (o.dry_run) {
    std::printf("config ok\npredicted communication:\n%s", predicted.c_str());
    return kExitOk;
  }
  fedcmd_plan* raw_plan = nullptr;
  if (o.plan.empty())
    check(fedcmd_plan_create(exp.get(), ds.get(), &raw_plan), "partition");
  else
    check(fedcmd_plan_load(o.plan.c_str(), ds.get(), &raw_plan), "plan");
  Plan plan(raw_plan);

  fedcmd_run* raw_run = nullptr;
  check(fedcmd_run_experiment(exp.get(), ds.get(), plan.get(), o.threads, &raw_run), "run");
  Run run(raw_run);
  const std::string dir = output_dir(exp.get());
  check(fedcmd_run_write(run.get(), dir.c_str()), "write report");
  char* head = nullptr;
  check(fedcmd_run_head_layer(run.get(), &head), "head layer");
  const std::string head_layer = take(head);
  std::printf("final mean accuracy %.4f", fedcmd_run_final_accuracy(run.get()));
  if (!head_layer.empty()) std::printf(", head layer %s", head_layer.c_str());
  std::printf("\nreport written to %s\n", dir.c_str());
  return kExitOk;
}

int cmd_report(const Options& o) {
  std::vector<const char*> paths;
  for (const auto& r : o.reports) paths.push_back(r.c_str());
  const std::string out = o.out.empty() ? "comparison" : o.out;
  char* md = nullptr;
  check(fedcmd_compare_reports(paths.data(), paths.size(), out.c_str(), &md), "report");
  std::fputs(take(md).c_str(), stdout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning with contrastive personalized-layer selection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fedcmd_version()));
  Options o;

  auto* partition = app.add_subcommand("partition", "Write a Dirichlet partition plan");
  partition->add_option("--config", o.config, "Experiment file")->check(CLI::ExistingFile);
  partition->add_option("--plan", o.plan, "Plan output path (default <out>/plan.json)");
  partition->add_option("--seed", o.seed, "Master seed");
  partition->add_option("--out", o.out, "Output directory");

  auto* run = app.add_subcommand("run", "Run an experiment");
  run->add_option("--config", o.config, "Experiment file")->check(CLI::ExistingFile);
  run->add_option("--plan", o.plan, "Partition plan (generated from the config when omitted)");
  run->add_option("--strategy", o.strategy, "fedcmd, fedavg, local-only or fixed-head");
  run->add_option("--seed", o.seed, "Master seed");
  run->add_option("--out", o.out, "Output directory");
  run->add_option("--eval-every", o.eval_every, "Evaluation interval in rounds")->check(CLI::PositiveNumber);
  run->add_option("--threads", o.threads, "Worker threads for client updates")->check(CLI::PositiveNumber);
  run->add_flag("--dry-run", o.dry_run, "Validate and print the predicted communication cost");

  auto* report = app.add_subcommand("report", "Compare run reports");
  report->add_option("reports", o.reports, "report.json files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", o.out, "Output directory (default ./comparison)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*partition) return cmd_partition(o);
    if (*run) return cmd_run(o);
    return cmd_report(o);
  } catch (const Failure& f) {
    return f.code;
  }
}
