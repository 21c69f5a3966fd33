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

#ifndef FEDCMD_FEDCMD_H_
#define FEDCMD_FEDCMD_H_

#include <stddef.h>

#if defined(FEDCMD_BUILDING_LIBRARY)
#define FEDCMD_API __attribute__((visibility("default")))
#else
#define FEDCMD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fedcmd_status {
  FEDCMD_OK = 0,
  FEDCMD_ERR_INVALID_ARGUMENT = 1,
  FEDCMD_ERR_CONFIG = 2,
  FEDCMD_ERR_NUMERIC = 3,
  FEDCMD_ERR_IO = 4,
  FEDCMD_ERR_FORMAT = 5,
  FEDCMD_ERR_STATE = 6,
  FEDCMD_ERR_INTERNAL = 7
} fedcmd_status;

typedef struct fedcmd_experiment fedcmd_experiment;
typedef struct fedcmd_dataset fedcmd_dataset;
typedef struct fedcmd_plan fedcmd_plan;
typedef struct fedcmd_run fedcmd_run;

FEDCMD_API const char* fedcmd_version(void);

/* Message for the last failed call on this thread; "" when none. */
FEDCMD_API const char* fedcmd_last_error(void);

/* Strings returned through char** out parameters are owned by the caller. */
FEDCMD_API void fedcmd_string_free(char* s);

/* Experiments: run settings, dataset source and output directory. */
FEDCMD_API fedcmd_status fedcmd_experiment_new(fedcmd_experiment** out);
FEDCMD_API fedcmd_status fedcmd_experiment_load(const char* path, fedcmd_experiment** out);
FEDCMD_API fedcmd_status fedcmd_experiment_parse(const char* text, fedcmd_experiment** out);
FEDCMD_API fedcmd_status fedcmd_experiment_set(fedcmd_experiment* exp, const char* key, const char* value);
FEDCMD_API fedcmd_status fedcmd_experiment_validate(const fedcmd_experiment* exp);
FEDCMD_API fedcmd_status fedcmd_experiment_serialize(const fedcmd_experiment* exp, char** out);
FEDCMD_API fedcmd_status fedcmd_experiment_output_dir(const fedcmd_experiment* exp, char** out);
FEDCMD_API void fedcmd_experiment_free(fedcmd_experiment* exp);

FEDCMD_API fedcmd_status fedcmd_dataset_load(const fedcmd_experiment* exp, fedcmd_dataset** out);
FEDCMD_API size_t fedcmd_dataset_size(const fedcmd_dataset* ds);
FEDCMD_API int fedcmd_dataset_num_classes(const fedcmd_dataset* ds);
FEDCMD_API void fedcmd_dataset_free(fedcmd_dataset* ds);

/* Dirichlet partition plans. Loading validates against the dataset. */
FEDCMD_API fedcmd_status fedcmd_plan_create(const fedcmd_experiment* exp, const fedcmd_dataset* ds,
                                            fedcmd_plan** out);
FEDCMD_API fedcmd_status fedcmd_plan_load(const char* path, const fedcmd_dataset* ds, fedcmd_plan** out);
FEDCMD_API fedcmd_status fedcmd_plan_save(const fedcmd_plan* plan, const char* path);
FEDCMD_API int fedcmd_plan_num_clients(const fedcmd_plan* plan);
/* One line per client: "client <id>: n=<count> [c0 c1 ...]". */
FEDCMD_API fedcmd_status fedcmd_plan_histograms(const fedcmd_plan* plan, const fedcmd_dataset* ds, char** out);
FEDCMD_API void fedcmd_plan_free(fedcmd_plan* plan);

/* Closed-form communication cost. For fedcmd, whose head is only known
   after selection, one line per candidate layer. */
FEDCMD_API fedcmd_status fedcmd_predict_communication(const fedcmd_experiment* exp, const fedcmd_dataset* ds,
                                                      char** out);

/* Runs the configured strategy. threads only affects speed. */
FEDCMD_API fedcmd_status fedcmd_run_experiment(const fedcmd_experiment* exp, const fedcmd_dataset* ds,
                                               const fedcmd_plan* plan, int threads, fedcmd_run** out);
FEDCMD_API double fedcmd_run_final_accuracy(const fedcmd_run* run);
/* Empty string when the strategy has no head layer. */
FEDCMD_API fedcmd_status fedcmd_run_head_layer(const fedcmd_run* run, char** out);
FEDCMD_API fedcmd_status fedcmd_run_report_json(const fedcmd_run* run, char** out);
/* report.json, rounds.csv and optional similarity dumps. */
FEDCMD_API fedcmd_status fedcmd_run_write(const fedcmd_run* run, const char* dir);
FEDCMD_API void fedcmd_run_free(fedcmd_run* run);

/* Comparison table plus plot CSVs; the table is returned when markdown is
   non-null. */
FEDCMD_API fedcmd_status fedcmd_compare_reports(const char* const* report_paths, size_t count, const char* out_dir,
                                                char** markdown);

#ifdef __cplusplus
}
#endif

#endif  // FEDCMD_FEDCMD_H_
