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

#include "fedcmd/fedcmd.h"

#include <cstring>
#include <exception>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "cli/compare.hpp"
#include "cli/experiment_file.hpp"
#include "common/error.hpp"
#include "data/partition.hpp"
#include "featdist/layer_scores.hpp"
#include "fl/comm.hpp"
#include "fl/report.hpp"
#include "fl/simulator.hpp"
#include "nn/architectures.hpp"
#include "nn/model.hpp"

struct fedcmd_experiment {
  fedcmd::cli::ExperimentFile file;
};

struct fedcmd_dataset {
  fedcmd::data::Dataset data;
  std::string descriptor;
};

struct fedcmd_plan {
  fedcmd::data::PartitionPlan plan;
};

struct fedcmd_run {
  fedcmd::fl::RunResult result;
};

namespace {

thread_local std::string g_last_error;

fedcmd_status to_status(fedcmd::ErrorCode code) {
  using fedcmd::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return FEDCMD_ERR_INVALID_ARGUMENT;
    case ErrorCode::kShape:
    case ErrorCode::kConfig: return FEDCMD_ERR_CONFIG;
    case ErrorCode::kNumeric: return FEDCMD_ERR_NUMERIC;
    case ErrorCode::kIo: return FEDCMD_ERR_IO;
    case ErrorCode::kFormat:
    case ErrorCode::kTruncated:
    case ErrorCode::kCountMismatch: return FEDCMD_ERR_FORMAT;
    case ErrorCode::kState: return FEDCMD_ERR_STATE;
  }
  return FEDCMD_ERR_INTERNAL;
}

template <class F>
fedcmd_status guarded(F&& fn) {
  g_last_error.clear();
  try {
    fn();
    return FEDCMD_OK;
  } catch (const fedcmd::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return FEDCMD_ERR_INTERNAL;
}

void require(const void* p, const char* what) {
  if (!p) fedcmd::fail(fedcmd::ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fedcmd::nn::ModelSpec model_spec(const fedcmd::fl::RunConfig& c, const fedcmd::data::Dataset& d) {
  return fedcmd::nn::architecture(c.model, d.sample_shape, d.num_classes, c.hidden);
}

}  // namespace

extern "C" {

const char* fedcmd_version(void) { return "0.1.0"; }

const char* fedcmd_last_error(void) { return g_last_error.c_str(); }

void fedcmd_string_free(char* s) { delete[] s; }

fedcmd_status fedcmd_experiment_new(fedcmd_experiment** out) {
  return guarded([&] {
    require(out, "out");
    *out = new fedcmd_experiment{};
  });
}

fedcmd_status fedcmd_experiment_load(const char* path, fedcmd_experiment** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new fedcmd_experiment{fedcmd::cli::load_experiment(path)};
  });
}

fedcmd_status fedcmd_experiment_parse(const char* text, fedcmd_experiment** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new fedcmd_experiment{fedcmd::cli::parse_experiment(text)};
  });
}

fedcmd_status fedcmd_experiment_set(fedcmd_experiment* exp, const char* key, const char* value) {
  return guarded([&] {
    require(exp, "experiment");
    require(key, "key");
    require(value, "value");
    fedcmd::cli::apply_setting(exp->file, key, value);
  });
}

fedcmd_status fedcmd_experiment_validate(const fedcmd_experiment* exp) {
  return guarded([&] {
    require(exp, "experiment");
    exp->file.run.validate();
  });
}

fedcmd_status fedcmd_experiment_serialize(const fedcmd_experiment* exp, char** out) {
  return guarded([&] {
    require(exp, "experiment");
    require(out, "out");
    *out = dup_string(fedcmd::cli::serialize_experiment(exp->file));
  });
}

fedcmd_status fedcmd_experiment_output_dir(const fedcmd_experiment* exp, char** out) {
  return guarded([&] {
    require(exp, "experiment");
    require(out, "out");
    *out = dup_string(exp->file.output_dir);
  });
}

void fedcmd_experiment_free(fedcmd_experiment* exp) { delete exp; }

fedcmd_status fedcmd_dataset_load(const fedcmd_experiment* exp, fedcmd_dataset** out) {
  return guarded([&] {
    require(exp, "experiment");
    require(out, "out");
    auto data = fedcmd::cli::load_dataset(exp->file.data, exp->file.run.resolved_data_seed());
    *out = new fedcmd_dataset{std::move(data), exp->file.data.descriptor()};
  });
}

size_t fedcmd_dataset_size(const fedcmd_dataset* ds) { return ds ? ds->data.size() : 0; }

int fedcmd_dataset_num_classes(const fedcmd_dataset* ds) { return ds ? ds->data.num_classes : 0; }

void fedcmd_dataset_free(fedcmd_dataset* ds) { delete ds; }

fedcmd_status fedcmd_plan_create(const fedcmd_experiment* exp, const fedcmd_dataset* ds, fedcmd_plan** out) {
  return guarded([&] {
    require(exp, "experiment");
    require(ds, "dataset");
    require(out, "out");
    const auto& run = exp->file.run;
    if (run.num_clients < 1) fedcmd::fail(fedcmd::ErrorCode::kConfig, "num_clients must be >= 1");
    if (!(run.alpha > 0.0)) fedcmd::fail(fedcmd::ErrorCode::kConfig, "alpha must be positive");
    *out = new fedcmd_plan{
        fedcmd::data::dirichlet_partition(ds->data, run.alpha, run.num_clients, run.resolved_data_seed())};
  });
}

fedcmd_status fedcmd_plan_load(const char* path, const fedcmd_dataset* ds, fedcmd_plan** out) {
  return guarded([&] {
    require(path, "path");
    require(ds, "dataset");
    require(out, "out");
    auto plan = fedcmd::data::load_plan(path);
    try {
      fedcmd::data::validate_plan(plan, ds->data.size());
    } catch (const fedcmd::Error& e) {
      fedcmd::fail(fedcmd::ErrorCode::kConfig, std::string("plan ") + path + " does not match the dataset: " + e.what());
    }
    *out = new fedcmd_plan{std::move(plan)};
  });
}

fedcmd_status fedcmd_plan_save(const fedcmd_plan* plan, const char* path) {
  return guarded([&] {
    require(plan, "plan");
    require(path, "path");
    fedcmd::data::save_plan(plan->plan, path);
  });
}

int fedcmd_plan_num_clients(const fedcmd_plan* plan) { return plan ? plan->plan.num_clients : 0; }

fedcmd_status fedcmd_plan_histograms(const fedcmd_plan* plan, const fedcmd_dataset* ds, char** out) {
  return guarded([&] {
    require(plan, "plan");
    require(ds, "dataset");
    require(out, "out");
    std::ostringstream s;
    for (std::size_t c = 0; c < plan->plan.assignment.size(); ++c) {
      const auto& idx = plan->plan.assignment[c];
      const auto hist = fedcmd::data::class_histogram(ds->data, idx);
      s << "client " << c << ": n=" << idx.size() << " [";
      for (std::size_t k = 0; k < hist.size(); ++k) s << (k ? " " : "") << hist[k];
      s << "]\n";
    }
    *out = dup_string(s.str());
  });
}

void fedcmd_plan_free(fedcmd_plan* plan) { delete plan; }

fedcmd_status fedcmd_predict_communication(const fedcmd_experiment* exp, const fedcmd_dataset* ds, char** out) {
  return guarded([&] {
    require(exp, "experiment");
    require(ds, "dataset");
    require(out, "out");
    const auto& run = exp->file.run;
    run.validate();
    const auto model = fedcmd::nn::build_model(model_spec(run, ds->data), run.init_seed());
    const auto layer_size = [&](const std::string& n) {
      return static_cast<std::uint64_t>(model.params()[model.layer_index(n)].size());
    };
    std::ostringstream s;
    s << "|theta| = " << model.num_params() << "\n";
    switch (run.strategy) {
      case fedcmd::fl::Strategy::kFedCmd:
        for (const auto& l : fedcmd::featdist::eligible_layers(model.spec()))
          s << "l* = " << l << " (|phi| = " << layer_size(l)
            << "): " << fedcmd::fl::predict_communication(run, model.num_params(), layer_size(l)).formula << "\n";
        break;
      case fedcmd::fl::Strategy::kFixedHead: {
        const auto head = model.parameterized_layers().back();
        s << "head = " << head << " (|phi| = " << layer_size(head)
          << "): " << fedcmd::fl::predict_communication(run, model.num_params(), layer_size(head)).formula << "\n";
        break;
      }
      default:
        s << fedcmd::fl::predict_communication(run, model.num_params(), 0).formula << "\n";
    }
    *out = dup_string(s.str());
  });
}

fedcmd_status fedcmd_run_experiment(const fedcmd_experiment* exp, const fedcmd_dataset* ds, const fedcmd_plan* plan,
                                    int threads, fedcmd_run** out) {
  return guarded([&] {
    require(exp, "experiment");
    require(ds, "dataset");
    require(plan, "plan");
    require(out, "out");
    fedcmd::fl::SimulatorOptions options;
    options.threads = threads < 1 ? 1 : threads;
    if (exp->file.run.checkpoint_every > 0)
      options.checkpoint_dir = std::filesystem::path(exp->file.output_dir) / "checkpoints";
    fedcmd::fl::Simulator sim(exp->file.run, ds->data, plan->plan, options);
    auto result = sim.run();
    result.dataset_descriptor = ds->descriptor;
    *out = new fedcmd_run{std::move(result)};
  });
}

double fedcmd_run_final_accuracy(const fedcmd_run* run) { return run ? run->result.final_evaluation.mean : 0.0; }

fedcmd_status fedcmd_run_head_layer(const fedcmd_run* run, char** out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    *out = dup_string(run->result.head_layer.value_or(""));
  });
}

fedcmd_status fedcmd_run_report_json(const fedcmd_run* run, char** out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    *out = dup_string(fedcmd::fl::report_text(run->result));
  });
}

fedcmd_status fedcmd_run_write(const fedcmd_run* run, const char* dir) {
  return guarded([&] {
    require(run, "run");
    require(dir, "dir");
    fedcmd::fl::write_run_outputs(run->result, dir);
  });
}

void fedcmd_run_free(fedcmd_run* run) { delete run; }

fedcmd_status fedcmd_compare_reports(const char* const* report_paths, size_t count, const char* out_dir,
                                     char** markdown) {
  return guarded([&] {
    require(out_dir, "out_dir");
    if (count > 0) require(report_paths, "report_paths");
    std::vector<std::filesystem::path> paths;
    for (size_t i = 0; i < count; ++i) {
      require(report_paths[i], "report path");
      paths.emplace_back(report_paths[i]);
    }
    const auto md = fedcmd::cli::compare_reports(paths, out_dir);
    if (markdown) *markdown = dup_string(md);
  });
}

}  // extern "C"
