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
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aggregation/aggregate.hpp"
#include "data/partition.hpp"
#include "featdist/gaussian.hpp"
#include "featdist/layer_scores.hpp"
#include "fl/config.hpp"
#include "fl/records.hpp"
#include "nn/model.hpp"
#include "selection/vote.hpp"

namespace fedcmd::fl {

struct ClientState {
  int client_id = 0;
  data::ClientShard shard;
  nn::Model model;
  std::optional<nn::ParamPartition> head_partition;
  std::uint64_t rng_seed = 0;
  featdist::GaussianSummary z_x;
  featdist::GaussianSummary z_y;
};

enum class Direction { kDown, kUp };

// One simulated transfer. Layer views are only valid inside the tap callback.
struct Message {
  Direction direction = Direction::kDown;
  Phase phase = Phase::kFederated;
  int round = 0;
  int client_id = 0;
  bool similarity_probe = false;
  std::vector<std::pair<std::string, std::span<const float>>> layers;

  std::uint64_t num_values() const;
  std::uint64_t bytes() const;
};

struct RunHooks {
  std::function<void(const Message&)> on_message;
  // Replaces the head similarity matrix with the identity in phase 2.
  bool identity_similarity = false;
};

struct SimulatorOptions {
  int threads = 1;
  RunHooks hooks;
  std::filesystem::path checkpoint_dir;  // empty disables checkpoints
};

struct Evaluation {
  std::vector<double> per_client;  // indexed by client id
  double mean = 0.0;
  double std = 0.0;  // population std over clients
  std::vector<std::size_t> class_correct;
  std::vector<std::size_t> class_total;
};

struct RunResult {
  RunConfig config;
  std::string dataset_descriptor;
  std::vector<RoundRecord> rounds;
  std::optional<std::string> head_layer;  // l* (fedcmd) or the classifier (fixed-head)
  std::optional<selection::VoteLedger> ledger;
  Evaluation final_evaluation;
  std::uint64_t total_params = 0;
  std::uint64_t head_params = 0;
  // theta_G^{K_p} head handed to every client when phase 2 starts.
  std::uint64_t handoff_bytes = 0;
  std::vector<std::pair<int, aggregation::SimilarityMatrix>> similarity;
};

// ceil(gamma * N) distinct ids in ascending order.
std::vector<int> sample_clients(int round, double gamma, int num_clients, std::uint64_t seed);

struct LocalUpdate {
  nn::Model model;
  double train_loss = 0.0;  // last epoch
};

// E epochs of SGD on the client's train shard starting from incoming. Errors
// are re-thrown with the client id prefixed.
LocalUpdate client_update(const ClientState& state, nn::Model incoming, int epochs, double lr,
                          int batch_size, int round);

double accuracy(const nn::Model& model, const data::Dataset& test,
                std::vector<std::size_t>* class_correct = nullptr,
                std::vector<std::size_t>* class_total = nullptr);

// Runs fn(i) for i in [0, n) over up to `threads` workers. The first failing
// index's exception is re-thrown after all workers join.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

class Simulator {
 public:
  Simulator(RunConfig config, const data::Dataset& dataset, const data::PartitionPlan& plan,
            SimulatorOptions options = {});

  RunResult run();

  const std::vector<ClientState>& states() const { return states_; }
  const nn::Model& initial_model() const { return initial_; }

  struct SelectionOutcome {
    std::string layer;
    nn::LayerParams<float> theta;
    std::vector<RoundRecord> records;
  };
  SelectionOutcome run_selection_phase();
  std::vector<RoundRecord> run_federated_phase(const std::string& l_star, const nn::LayerParams<float>& theta,
                                               int first_round);
  std::vector<RoundRecord> run_baseline();

  Evaluation evaluate_all() const;

  // Body layers the server currently holds for a client in phase 2: the
  // shared pre-l* layers plus that client's post-l* layers.
  std::map<std::string, std::vector<float>> server_body(std::size_t client) const;

 private:
  nn::Model eval_model(std::size_t client) const;
  void emit(const Message& m) const;
  void maybe_evaluate(RoundRecord& record);
  void maybe_checkpoint(int round) const;

  RunConfig config_;
  SimulatorOptions options_;
  nn::Model initial_;
  std::vector<ClientState> states_;
  std::uint64_t sampling_seed_ = 0;

  // Server state. global_ backs fedavg and phase 1; the phase-2 fields hold
  // the shared pre-l* body and one post-l* body per client.
  enum class Stage { kGlobal, kDecoupled, kLocal };
  Stage stage_ = Stage::kGlobal;
  nn::LayerParams<float> global_;
  std::string head_layer_;
  std::vector<std::string> pre_layers_;
  std::vector<std::string> post_layers_;
  std::map<std::string, std::vector<float>> shared_pre_;
  std::vector<std::map<std::string, std::vector<float>>> client_post_;

  std::optional<selection::VoteLedger> ledger_;
  std::vector<std::pair<int, aggregation::SimilarityMatrix>> similarity_;
  std::uint64_t handoff_bytes_ = 0;
  std::optional<Evaluation> last_evaluation_;
};

}  // namespace fedcmd::fl
