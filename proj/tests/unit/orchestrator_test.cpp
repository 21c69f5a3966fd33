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

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <filesystem>
#include <set>

#include "common/error.hpp"
#include "data/dataset.hpp"
#include "data/partition.hpp"
#include "fl/comm.hpp"
#include "fl/config.hpp"
#include "fl/report.hpp"
#include "fl/simulator.hpp"
#include "nn/architectures.hpp"

namespace fedcmd::fl {
namespace {

data::Dataset small_data(std::uint64_t seed = 1, int classes = 4, int per_class = 40) {
  data::SyntheticOptions o;
  o.num_classes = classes;
  o.samples_per_class = per_class;
  o.input_shape = {8};
  o.class_separation = 3.0;
  o.seed = seed;
  return data::generate_synthetic(o);
}

RunConfig small_config(Strategy s) {
  RunConfig c;
  c.strategy = s;
  c.rounds = 10;
  c.rho = 0.2;
  c.join_ratio = 0.5;
  c.local_epochs = 1;
  c.batch_size = 16;
  c.lr = 0.05;
  c.num_clients = 6;
  c.alpha = 0.5;
  c.seed = 3;
  c.model = "mlp";
  c.hidden = {8, 6};
  c.eval_every = 5;
  return c;
}

struct Setup {
  data::Dataset data;
  data::PartitionPlan plan;
};

Setup setup_for(const RunConfig& c, std::uint64_t data_seed = 1) {
  Setup s{small_data(data_seed), {}};
  s.plan = data::dirichlet_partition(s.data, c.alpha, c.num_clients, c.resolved_data_seed());
  return s;
}

RunResult run(const RunConfig& c, int threads = 1, RunHooks hooks = {}) {
  const auto s = setup_for(c);
  SimulatorOptions o;
  o.threads = threads;
  o.hooks = std::move(hooks);
  Simulator sim(c, s.data, s.plan, o);
  return sim.run();
}

TEST(ConfigTest, DefaultsAndValidation) {
  RunConfig c;
  EXPECT_EQ(c.rounds, 200);
  EXPECT_EQ(c.local_epochs, 5);
  EXPECT_EQ(c.batch_size, 32);
  EXPECT_DOUBLE_EQ(c.lr, 0.01);
  EXPECT_DOUBLE_EQ(c.join_ratio, 0.1);
  EXPECT_DOUBLE_EQ(c.rho, 0.1);
  EXPECT_DOUBLE_EQ(c.epsilon, 1e-8);
  EXPECT_EQ(c.selection_rounds(), 20);
  EXPECT_EQ(c.clients_per_round(), 10);
  c.validate();
  auto bad = c;
  bad.local_epochs = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.join_ratio = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.rho = 1.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.rounds = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.rounds = 2;
  bad.rho = 0.1;  // K_p rounds to 0
  EXPECT_THROW(bad.validate(), Error);
}

TEST(SampleClientsTest, Examples) {
  const auto ids = sample_clients(1, 0.1, 100, 5);
  ASSERT_EQ(ids.size(), 10u);
  EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
  EXPECT_EQ(std::set<int>(ids.begin(), ids.end()).size(), 10u);
  for (int id : ids) {
    EXPECT_GE(id, 0);
    EXPECT_LT(id, 100);
  }
  EXPECT_EQ(sample_clients(1, 1.0, 7, 5), (std::vector<int>{0, 1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(sample_clients(4, 0.3, 50, 9), sample_clients(4, 0.3, 50, 9));
  EXPECT_NE(sample_clients(4, 0.3, 50, 9), sample_clients(5, 0.3, 50, 9));
  EXPECT_EQ(sample_clients(1, 0.25, 10, 1).size(), 3u);
}

ClientState make_state(const data::Dataset& d, int id, std::uint64_t seed) {
  data::PartitionPlan p;
  p.num_clients = 1;
  p.alpha = 1;
  p.assignment.resize(1);
  for (std::size_t i = 0; i < d.size(); ++i) p.assignment[0].push_back(i);
  auto shard = data::make_shards(d, p, 1)[0];
  shard.client_id = id;
  auto model = nn::build_model(nn::mlp({8}, {6}, 4), 1);
  return ClientState{id, std::move(shard), model, std::nullopt, seed, {}, {}};
}

TEST(ClientUpdateTest, ZeroLrAndDeterminism) {
  const auto d = small_data();
  const auto a = make_state(d, 0, 11);
  const auto b = make_state(d, 1, 11);
  const auto zero = client_update(a, a.model, 5, 0.0, 16, 1);
  EXPECT_EQ(zero.model.params(), a.model.params());
  const auto ua = client_update(a, a.model, 2, 0.05, 16, 3);
  const auto ub = client_update(b, b.model, 2, 0.05, 16, 3);
  EXPECT_EQ(ua.model.params(), ub.model.params());
  EXPECT_NE(ua.model.params(), a.model.params());
  EXPECT_THROW(client_update(a, a.model, 0, 0.05, 16, 1), Error);
}

TEST(ClientUpdateTest, NumericFailureNamesClient) {
  const auto d = small_data();
  auto s = make_state(d, 7, 1);
  auto p = s.model.params();
  p[0][0] = std::numeric_limits<float>::infinity();
  s.model.set_params(p);
  try {
    client_update(s, s.model, 1, 0.05, 16, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
    EXPECT_NE(std::string(e.what()).find("client 7"), std::string::npos) << e.what();
  }
}

TEST(SimulatorTest, FedCmdPhasesAndLedger) {
  const auto c = small_config(Strategy::kFedCmd);
  RunConfig dump = c;
  dump.dump_similarity = true;
  const auto r = run(dump);
  ASSERT_EQ(r.rounds.size(), 10u);
  ASSERT_TRUE(r.ledger.has_value());
  ASSERT_TRUE(r.head_layer.has_value());
  EXPECT_EQ(r.ledger->rounds_seen(), 2);
  EXPECT_EQ(*r.ledger->final_layer(), *r.head_layer);
  for (const auto& rec : r.rounds) {
    const bool selection = rec.round <= 2;
    EXPECT_EQ(rec.phase == Phase::kSelection, selection) << rec.round;
    EXPECT_EQ(rec.winner.has_value(), selection) << rec.round;
    EXPECT_EQ(rec.sampled_clients.size(), 3u);
    if (selection) {
      EXPECT_EQ(rec.similarity_probe_bytes, 0u);
    }
  }
  for (const auto& [round, phi] : r.similarity) EXPECT_GT(round, 2);
  for (const auto& [round, votes] : r.ledger->votes()) EXPECT_LE(round, 2);
}

TEST(SimulatorTest, SingleFederatedRoundAtBoundary) {
  auto c = small_config(Strategy::kFedCmd);
  c.rounds = 5;
  c.rho = 0.8;  // K_p = 4 = K - 1
  const auto r = run(c);
  ASSERT_EQ(r.rounds.size(), 5u);
  EXPECT_EQ(std::count_if(r.rounds.begin(), r.rounds.end(), [](const auto& x) { return x.phase == Phase::kFederated; }),
            1);
}

TEST(SimulatorTest, HeadPrivacyAndUniformHead) {
  for (Strategy s : {Strategy::kFedCmd, Strategy::kFixedHead}) {
    const auto c = small_config(s);
    const auto setup = setup_for(c);
    std::string head;
    std::vector<std::vector<float>> uploaded_heads;
    int probes = 0;
    std::vector<std::string> violations;
    RunHooks hooks;
    hooks.on_message = [&](const Message& m) {
      if (m.phase != Phase::kFederated) return;
      if (m.similarity_probe) {
        ++probes;
        if (m.layers.size() != 1 || m.direction != Direction::kUp) violations.push_back("malformed probe");
        uploaded_heads.emplace_back(m.layers[0].second.begin(), m.layers[0].second.end());
        head = m.layers[0].first;
        return;
      }
      for (const auto& [name, values] : m.layers) {
        if (!head.empty() && name == head) violations.push_back("round " + std::to_string(m.round) + " carries " + name);
        if (m.direction == Direction::kDown)
          for (const auto& h : uploaded_heads)
            if (h.size() == values.size() && std::equal(h.begin(), h.end(), values.begin()))
              violations.push_back("down message contains an uploaded head");
      }
    };
    SimulatorOptions o;
    o.hooks = hooks;
    Simulator sim(c, setup.data, setup.plan, o);
    const auto r = sim.run();
    ASSERT_TRUE(r.head_layer.has_value());
    if (s == Strategy::kFixedHead) {
      EXPECT_EQ(*r.head_layer, "classifier");
    }
    EXPECT_TRUE(violations.empty()) << violations.front();
    for (const auto& st : sim.states()) {
      ASSERT_TRUE(st.head_partition.has_value());
      EXPECT_EQ(st.head_partition->head_layer, *r.head_layer);
    }
    // The classifier head leaves nothing after it, so fixed-head sends no probes.
    if (s == Strategy::kFixedHead && c.split_mode == SplitMode::kBeforeAfter) {
      EXPECT_EQ(probes, 0);
    }
  }
}

TEST(SimulatorTest, IdentitySimilarityKeepsOwnPostBodies) {
  auto c = small_config(Strategy::kFedCmd);
  c.split_mode = SplitMode::kWholeBody;
  const auto setup = setup_for(c);
  SimulatorOptions o;
  o.hooks.identity_similarity = true;
  Simulator sim(c, setup.data, setup.plan, o);
  const auto r = sim.run();
  const auto& last = r.rounds.back();
  for (int id : last.sampled_clients) {
    const auto& st = sim.states()[static_cast<std::size_t>(id)];
    const auto body = sim.server_body(static_cast<std::size_t>(id));
    for (const auto& [name, values] : body) EXPECT_EQ(values, st.head_partition->body.at(name)) << name;
  }
}

TEST(CommunicationTest, MeasuredEqualsPredictedForEveryStrategy) {
  std::map<Strategy, RunResult> results;
  for (Strategy s : {Strategy::kFedCmd, Strategy::kFedAvg, Strategy::kLocalOnly, Strategy::kFixedHead}) {
    const auto r = run(small_config(s));
    const auto measured = account_communication(r.rounds);
    const auto predicted = predict_communication(r.config, r.total_params, r.head_params);
    EXPECT_EQ(measured, predicted.cumulative) << to_string(s);
    for (std::size_t i = 0; i < r.rounds.size(); ++i) {
      EXPECT_EQ(r.rounds[i].bytes_up, predicted.up[i]);
      EXPECT_EQ(r.rounds[i].bytes_down, predicted.down[i]);
    }
    results.emplace(s, r);
  }
  const auto& cmd = results.at(Strategy::kFedCmd);
  const auto& avg = results.at(Strategy::kFedAvg);
  const std::uint64_t n = 3;
  for (std::size_t i = 0; i < cmd.rounds.size(); ++i) {
    if (cmd.rounds[i].phase == Phase::kSelection)
      EXPECT_EQ(cmd.rounds[i].bytes_up, avg.rounds[i].bytes_up);
    else
      EXPECT_EQ(avg.rounds[i].bytes_up - cmd.rounds[i].bytes_up, 4 * cmd.head_params * n);
  }
  EXPECT_LT(cmd.rounds.back().bytes_up, cmd.rounds.front().bytes_up);
  for (const auto& rec : results.at(Strategy::kLocalOnly).rounds) {
    EXPECT_EQ(rec.bytes_up, 0u);
    EXPECT_EQ(rec.bytes_down, 0u);
  }
  const auto& fixed = results.at(Strategy::kFixedHead);
  // mlp 8 -> 8 -> 6 -> 4: classifier holds 6 * 4 + 4 values.
  EXPECT_EQ(fixed.head_params, 28u);
  for (const auto& rec : fixed.rounds) EXPECT_EQ(rec.bytes_up, (fixed.total_params - 28) * n * 4);
}

TEST(SimulatorTest, FedAvgWithOneClientIsLocalTraining) {
  auto c = small_config(Strategy::kFedAvg);
  c.num_clients = 1;
  c.join_ratio = 1.0;
  const auto a = run(c);
  c.strategy = Strategy::kLocalOnly;
  const auto b = run(c);
  ASSERT_EQ(a.rounds.size(), b.rounds.size());
  for (std::size_t i = 0; i < a.rounds.size(); ++i) EXPECT_EQ(a.rounds[i].mean_train_loss, b.rounds[i].mean_train_loss);
  EXPECT_EQ(a.final_evaluation.per_client, b.final_evaluation.per_client);
}

TEST(SimulatorTest, ReportsAreIdenticalAcrossRerunsAndThreadCounts) {
  const auto c = small_config(Strategy::kFedCmd);
  const auto one = report_text(run(c, 1));
  EXPECT_EQ(one, report_text(run(c, 1)));
  EXPECT_EQ(one, report_text(run(c, 4)));
}

TEST(SimulatorTest, TrainingLossDecreases) {
  for (Strategy s : {Strategy::kFedCmd, Strategy::kFedAvg, Strategy::kLocalOnly, Strategy::kFixedHead}) {
    auto c = small_config(s);
    c.rounds = 20;
    c.rho = 0.1;
    const auto r = run(c);
    EXPECT_LT(r.rounds.back().mean_train_loss, r.rounds.front().mean_train_loss) << to_string(s);
  }
}

TEST(EvaluationTest, UntrainedModelsAreNearChance) {
  double total = 0;
  const int seeds = 10;
  for (int seed = 0; seed < seeds; ++seed) {
    data::SyntheticOptions o;
    o.num_classes = 10;
    o.samples_per_class = 40;
    o.input_shape = {12};
    o.seed = static_cast<std::uint64_t>(seed);
    const auto d = data::generate_synthetic(o);
    auto c = small_config(Strategy::kFedAvg);
    c.seed = static_cast<std::uint64_t>(seed);
    c.alpha = 1e6;
    c.num_clients = 4;
    const auto plan = data::dirichlet_partition(d, c.alpha, c.num_clients, 1);
    Simulator sim(c, d, plan);
    total += sim.evaluate_all().mean;
  }
  EXPECT_NEAR(total / seeds, 0.1, 0.05);
}

TEST(EvaluationTest, PerClassCountsAddUpToPooledAccuracy) {
  const auto r = run(small_config(Strategy::kFedCmd));
  const auto& ev = r.final_evaluation;
  std::size_t correct = 0, total = 0;
  for (std::size_t k = 0; k < ev.class_total.size(); ++k) {
    correct += ev.class_correct[k];
    total += ev.class_total[k];
  }
  const auto setup = setup_for(r.config);
  const auto shards = data::make_shards(setup.data, setup.plan, r.config.resolved_data_seed());
  std::size_t test_total = 0;
  double weighted = 0;
  for (std::size_t i = 0; i < shards.size(); ++i) {
    test_total += shards[i].test.size();
    weighted += ev.per_client[i] * static_cast<double>(shards[i].test.size());
  }
  EXPECT_EQ(total, test_total);
  EXPECT_NEAR(static_cast<double>(correct), weighted, 1e-6);
}

TEST(SimulatorTest, CheckpointsAreWritten) {
  auto c = small_config(Strategy::kFedCmd);
  c.checkpoint_every = 5;
  const auto s = setup_for(c);
  SimulatorOptions o;
  o.checkpoint_dir = std::filesystem::temp_directory_path() / "fedcmd_ckpt_run";
  std::filesystem::remove_all(o.checkpoint_dir);
  Simulator sim(c, s.data, s.plan, o);
  sim.run();
  EXPECT_TRUE(std::filesystem::exists(o.checkpoint_dir / "round_0005" / "client_0000.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(o.checkpoint_dir / "round_0010" / "client_0005.ckpt"));
  std::filesystem::remove_all(o.checkpoint_dir);
}

TEST(SimulatorTest, PlanMustMatchConfig) {
  auto c = small_config(Strategy::kFedAvg);
  auto s = setup_for(c);
  c.num_clients = 5;
  EXPECT_THROW(Simulator(c, s.data, s.plan), Error);
}

}  // namespace
}  // namespace fedcmd::fl
