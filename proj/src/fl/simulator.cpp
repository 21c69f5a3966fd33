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

#include "fl/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <set>
#include <thread>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "fl/comm.hpp"
#include "nn/architectures.hpp"
#include "nn/checkpoint.hpp"

namespace fedcmd::fl {

namespace {

constexpr int kEvalBatch = 256;

using LayerMap = std::map<std::string, std::vector<float>>;

std::vector<float> concat(const LayerMap& layers, const std::vector<std::string>& names) {
  std::vector<float> flat;
  for (const auto& n : names) {
    const auto& v = layers.at(n);
    flat.insert(flat.end(), v.begin(), v.end());
  }
  return flat;
}

// Inverse of concat, using `shape_from` for per-layer sizes.
LayerMap unconcat(const std::vector<float>& flat, const std::vector<std::string>& names,
                  const LayerMap& shape_from) {
  LayerMap out;
  std::size_t offset = 0;
  for (const auto& n : names) {
    const std::size_t len = shape_from.at(n).size();
    out[n].assign(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                  flat.begin() + static_cast<std::ptrdiff_t>(offset + len));
    offset += len;
  }
  return out;
}

LayerMap named_layers(const nn::Model& model, const std::vector<std::string>& names) {
  LayerMap out;
  for (const auto& n : names) out[n] = model.params()[model.layer_index(n)];
  return out;
}

void add_views(Message& m, const LayerMap& layers, const std::vector<std::string>& names) {
  for (const auto& n : names) m.layers.emplace_back(n, std::span<const float>(layers.at(n)));
}

void add_views(Message& m, const nn::Model& model, const std::vector<std::string>& names) {
  for (const auto& n : names)
    m.layers.emplace_back(n, std::span<const float>(model.params()[model.layer_index(n)]));
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::uint64_t Message::num_values() const {
  std::uint64_t n = 0;
  for (const auto& [name, view] : layers) n += view.size();
  return n;
}

std::uint64_t Message::bytes() const { return kBytesPerParam * num_values(); }

std::vector<int> sample_clients(int round, double gamma, int num_clients, std::uint64_t seed) {
  if (num_clients < 1) fail(ErrorCode::kInvalidArgument, "num_clients must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail(ErrorCode::kInvalidArgument, "gamma must be in (0, 1]");
  const int n = clients_per_round(gamma, num_clients);
  std::vector<int> ids(static_cast<std::size_t>(num_clients));
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(derive_seed(seed, {seed_tag::kSampling, static_cast<std::uint64_t>(round)}));
  // Partial Fisher-Yates: the first n slots are the sample.
  for (int i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng.below(num_clients - i));
    std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
  }
  ids.resize(static_cast<std::size_t>(n));
  std::sort(ids.begin(), ids.end());
  return ids;
}

LocalUpdate client_update(const ClientState& state, nn::Model incoming, int epochs, double lr,
                          int batch_size, int round) {
  if (epochs < 1) fail(ErrorCode::kConfig, "local_epochs must be >= 1");
  try {
    LocalUpdate out{std::move(incoming), 0.0};
    const auto data = state.shard.train.view();
    for (int e = 0; e < epochs; ++e) {
      nn::SgdOptions opt;
      opt.lr = lr;
      opt.batch_size = batch_size;
      opt.shuffle_seed = derive_seed(state.rng_seed, {seed_tag::kShuffle, static_cast<std::uint64_t>(round),
                                                      static_cast<std::uint64_t>(e)});
      auto epoch = nn::sgd_epoch(std::move(out.model), data, opt);
      out.model = std::move(epoch.model);
      out.train_loss = epoch.mean_loss;
    }
    return out;
  } catch (const Error& e) {
    throw Error(e.code(), "client " + std::to_string(state.client_id) + ": " + e.what());
  }
}

double accuracy(const nn::Model& model, const data::Dataset& test, std::vector<std::size_t>* class_correct,
                std::vector<std::size_t>* class_total) {
  if (test.size() == 0) return 0.0;
  const auto view = test.view();
  const int k = model.num_classes();
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < test.size(); start += kEvalBatch) {
    const std::size_t end = std::min(test.size(), start + kEvalBatch);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto batch = nn::gather_batch(test.sample_shape, view, idx);
    const auto result = nn::forward(model, batch, nn::Mode::kEval);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const float* row = result.logits.data.data() + b * static_cast<std::size_t>(k);
      const int pred = static_cast<int>(std::max_element(row, row + k) - row);
      const int label = test.labels[idx[b]];
      const bool hit = pred == label;
      correct += hit ? 1 : 0;
      if (class_total) (*class_total)[static_cast<std::size_t>(label)] += 1;
      if (class_correct && hit) (*class_correct)[static_cast<std::size_t>(label)] += 1;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Simulator::Simulator(RunConfig config, const data::Dataset& dataset, const data::PartitionPlan& plan,
                     SimulatorOptions options)
    : config_(std::move(config)),
      options_(std::move(options)),
      initial_(nn::build_model(
          nn::architecture(config_.model, dataset.sample_shape, dataset.num_classes, config_.hidden),
          config_.init_seed())) {
  config_.validate();
  if (plan.num_clients != config_.num_clients)
    fail(ErrorCode::kConfig, "plan has " + std::to_string(plan.num_clients) + " clients but num_clients is " +
                                 std::to_string(config_.num_clients));
  validate_plan(plan, dataset.size());
  sampling_seed_ = config_.resolved_sampling_seed();

  auto shards = data::make_shards(dataset, plan, config_.resolved_data_seed());
  states_.reserve(shards.size());
  for (auto& shard : shards) {
    const int id = shard.client_id;
    ClientState s{id, std::move(shard), initial_, std::nullopt, config_.client_seed(id), {}, {}};
    s.z_x = featdist::fit_inputs(s.shard.train.view());
    s.z_y = featdist::fit_labels(s.shard.train.labels, dataset.num_classes, config_.label_encoding);
    states_.push_back(std::move(s));
  }
  global_ = initial_.params();
}

void Simulator::emit(const Message& m) const {
  if (options_.hooks.on_message) options_.hooks.on_message(m);
}

nn::Model Simulator::eval_model(std::size_t client) const {
  switch (stage_) {
    case Stage::kLocal:
      return states_[client].model;
    case Stage::kGlobal: {
      nn::Model m = initial_;
      m.set_params(global_);
      return m;
    }
    case Stage::kDecoupled: {
      nn::ParamPartition part;
      part.head_layer = head_layer_;
      part.head = states_[client].head_partition->head;
      part.body = shared_pre_;
      for (const auto& [n, v] : client_post_[client]) part.body[n] = v;
      nn::Model m = initial_;
      m.set_params(nn::merge_params(initial_, part));
      return m;
    }
  }
  return initial_;
}

std::map<std::string, std::vector<float>> Simulator::server_body(std::size_t client) const {
  if (stage_ != Stage::kDecoupled) fail(ErrorCode::kState, "server holds per-client bodies only in phase 2");
  auto body = shared_pre_;
  for (const auto& [n, v] : client_post_.at(client)) body[n] = v;
  return body;
}

Evaluation Simulator::evaluate_all() const {
  const std::size_t n = states_.size();
  const auto k = static_cast<std::size_t>(initial_.num_classes());
  std::vector<double> acc(n);
  std::vector<std::vector<std::size_t>> correct(n, std::vector<std::size_t>(k, 0));
  std::vector<std::vector<std::size_t>> total(n, std::vector<std::size_t>(k, 0));
  parallel_for(n, options_.threads, [&](std::size_t i) {
    acc[i] = accuracy(eval_model(i), states_[i].shard.test, &correct[i], &total[i]);
  });
  Evaluation ev;
  ev.per_client = acc;
  ev.mean = mean_of(acc);
  double var = 0.0;
  for (double a : acc) var += (a - ev.mean) * (a - ev.mean);
  ev.std = n ? std::sqrt(var / static_cast<double>(n)) : 0.0;
  ev.class_correct.assign(k, 0);
  ev.class_total.assign(k, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) {
      ev.class_correct[c] += correct[i][c];
      ev.class_total[c] += total[i][c];
    }
  return ev;
}

void Simulator::maybe_evaluate(RoundRecord& record) {
  if (record.round % config_.eval_every != 0 && record.round != config_.rounds) return;
  last_evaluation_ = evaluate_all();
  record.mean_accuracy = last_evaluation_->mean;
  record.std_accuracy = last_evaluation_->std;
}

void Simulator::maybe_checkpoint(int round) const {
  if (options_.checkpoint_dir.empty() || config_.checkpoint_every <= 0) return;
  if (round % config_.checkpoint_every != 0 && round != config_.rounds) return;
  char dir[32];
  std::snprintf(dir, sizeof dir, "round_%04d", round);
  const auto base = options_.checkpoint_dir / dir;
  std::filesystem::create_directories(base);
  if (stage_ == Stage::kGlobal) {
    nn::save_checkpoint(eval_model(0), base / "global.ckpt");
    return;
  }
  for (std::size_t i = 0; i < states_.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "client_%04zu.ckpt", i);
    nn::save_checkpoint(eval_model(i), base / name);
  }
}

Simulator::SelectionOutcome Simulator::run_selection_phase() {
  if (config_.strategy != Strategy::kFedCmd) fail(ErrorCode::kState, "selection phase requires strategy fedcmd");
  stage_ = Stage::kGlobal;
  const auto eligible = featdist::eligible_layers(initial_.spec());
  const auto all_layers = initial_.parameterized_layers();
  ledger_.emplace(eligible, config_.selection_rounds());
  SelectionOutcome out;

  for (int round = 1; round <= config_.selection_rounds(); ++round) {
    RoundRecord rec;
    rec.round = round;
    rec.phase = Phase::kSelection;
    rec.sampled_clients = sample_clients(round, config_.join_ratio, config_.num_clients, sampling_seed_);
    const auto& sampled = rec.sampled_clients;

    nn::Model broadcast = initial_;
    broadcast.set_params(global_);
    for (int id : sampled) {
      Message m{Direction::kDown, Phase::kSelection, round, id, false, {}};
      add_views(m, broadcast, all_layers);
      rec.bytes_down += m.bytes();
      emit(m);
    }

    std::vector<std::optional<LocalUpdate>> updates(sampled.size());
    std::vector<std::string> votes(sampled.size());
    parallel_for(sampled.size(), options_.threads, [&](std::size_t j) {
      const auto& st = states_[static_cast<std::size_t>(sampled[j])];
      updates[j] = client_update(st, broadcast, config_.local_epochs, config_.lr, config_.batch_size, round);
      const auto scores = featdist::score_all_layers(updates[j]->model, st.shard.train.view(), st.z_x, st.z_y, eligible);
      votes[j] = selection::client_vote(scores, eligible);
    });

    std::vector<aggregation::WeightedParams> inputs;
    std::vector<std::vector<float>> flats;
    std::map<int, std::string> round_votes;
    std::vector<double> losses;
    for (std::size_t j = 0; j < sampled.size(); ++j) {
      auto& st = states_[static_cast<std::size_t>(sampled[j])];
      st.model = updates[j]->model;
      Message m{Direction::kUp, Phase::kSelection, round, sampled[j], false, {}};
      add_views(m, st.model, all_layers);
      rec.bytes_up += m.bytes();
      emit(m);
      flats.push_back(concat(named_layers(st.model, all_layers), all_layers));
      round_votes[sampled[j]] = votes[j];
      losses.push_back(updates[j]->train_loss);
    }
    for (std::size_t j = 0; j < sampled.size(); ++j)
      inputs.push_back({flats[j], static_cast<double>(states_[static_cast<std::size_t>(sampled[j])].shard.train.size())});
    const auto avg = aggregation::fedavg(inputs);
    const auto avg_layers = unconcat(avg, all_layers, named_layers(initial_, all_layers));
    for (const auto& [n, v] : avg_layers) global_[initial_.layer_index(n)] = v;

    rec.winner = ledger_->record_round(round, round_votes);
    rec.mean_train_loss = mean_of(losses);
    maybe_evaluate(rec);
    maybe_checkpoint(round);
    out.records.push_back(std::move(rec));
  }
  out.layer = ledger_->finalize();
  out.theta = global_;
  return out;
}

std::vector<RoundRecord> Simulator::run_federated_phase(const std::string& l_star,
                                                        const nn::LayerParams<float>& theta, int first_round) {
  const auto all_layers = initial_.parameterized_layers();
  if (std::find(all_layers.begin(), all_layers.end(), l_star) == all_layers.end())
    fail(ErrorCode::kInvalidArgument, "personalized layer '" + l_star + "' is not a parameterized layer");
  nn::Model start = initial_;
  start.set_params(theta);

  head_layer_ = l_star;
  pre_layers_.clear();
  post_layers_.clear();
  const std::size_t h = initial_.layer_index(l_star);
  for (const auto& n : all_layers) {
    if (n == l_star) continue;
    const bool before = initial_.layer_index(n) < h;
    if (before && config_.split_mode == SplitMode::kBeforeAfter)
      pre_layers_.push_back(n);
    else
      post_layers_.push_back(n);
  }
  shared_pre_ = named_layers(start, pre_layers_);
  client_post_.assign(states_.size(), named_layers(start, post_layers_));
  const auto start_split = nn::split_params(start, l_star);
  for (auto& st : states_) {
    st.head_partition = start_split;
    st.model = start;
  }
  if (config_.strategy == Strategy::kFedCmd) {
    const std::uint64_t head_values = start_split.head.at(l_star).size();
    handoff_bytes_ = kBytesPerParam * head_values * states_.size();
  }
  stage_ = Stage::kDecoupled;

  std::vector<std::string> body_layers = pre_layers_;
  body_layers.insert(body_layers.end(), post_layers_.begin(), post_layers_.end());
  const std::vector<std::string> head_names{l_star};

  std::vector<RoundRecord> records;
  for (int round = first_round; round <= config_.rounds; ++round) {
    RoundRecord rec;
    rec.round = round;
    rec.phase = Phase::kFederated;
    rec.sampled_clients = sample_clients(round, config_.join_ratio, config_.num_clients, sampling_seed_);
    const auto& sampled = rec.sampled_clients;

    std::vector<nn::Model> incoming;
    incoming.reserve(sampled.size());
    for (int id : sampled) {
      const auto i = static_cast<std::size_t>(id);
      Message m{Direction::kDown, Phase::kFederated, round, id, false, {}};
      add_views(m, shared_pre_, pre_layers_);
      add_views(m, client_post_[i], post_layers_);
      rec.bytes_down += m.bytes();
      emit(m);
      // omega from the server composed with the client's own phi.
      nn::ParamPartition part;
      part.head_layer = l_star;
      part.head = states_[i].head_partition->head;
      part.body = shared_pre_;
      for (const auto& [n, v] : client_post_[i]) part.body[n] = v;
      nn::Model local = initial_;
      local.set_params(nn::merge_params(initial_, part));
      incoming.push_back(std::move(local));
    }

    std::vector<std::optional<LocalUpdate>> updates(sampled.size());
    parallel_for(sampled.size(), options_.threads, [&](std::size_t j) {
      updates[j] = client_update(states_[static_cast<std::size_t>(sampled[j])], incoming[j], config_.local_epochs,
                                 config_.lr, config_.batch_size, round);
    });

    std::vector<double> losses;
    std::vector<std::vector<float>> pre_flats;
    std::map<int, std::vector<float>> post_bodies;
    std::map<int, std::vector<float>> heads;
    for (std::size_t j = 0; j < sampled.size(); ++j) {
      auto& st = states_[static_cast<std::size_t>(sampled[j])];
      st.model = updates[j]->model;
      st.head_partition = nn::split_params(st.model, l_star);
      losses.push_back(updates[j]->train_loss);

      Message up{Direction::kUp, Phase::kFederated, round, sampled[j], false, {}};
      add_views(up, st.head_partition->body, body_layers);
      rec.bytes_up += up.bytes();
      emit(up);
      if (!post_layers_.empty()) {
        Message probe{Direction::kUp, Phase::kFederated, round, sampled[j], true, {}};
        add_views(probe, st.head_partition->head, head_names);
        rec.similarity_probe_bytes += probe.bytes();
        emit(probe);
        heads[sampled[j]] = st.head_partition->head.at(l_star);
        post_bodies[sampled[j]] = concat(st.head_partition->body, post_layers_);
      }
      pre_flats.push_back(concat(st.head_partition->body, pre_layers_));
    }

    if (!pre_layers_.empty()) {
      std::vector<aggregation::WeightedParams> inputs;
      for (std::size_t j = 0; j < sampled.size(); ++j)
        inputs.push_back(
            {pre_flats[j], static_cast<double>(states_[static_cast<std::size_t>(sampled[j])].shard.train.size())});
      shared_pre_ = unconcat(aggregation::fedavg(inputs), pre_layers_, shared_pre_);
    }
    if (!post_layers_.empty()) {
      const auto phi = options_.hooks.identity_similarity
                           ? aggregation::SimilarityMatrix::identity(std::vector<int>(sampled))
                           : aggregation::build_similarity(heads, config_.epsilon);
      auto update = aggregation::weighted_body_update(post_bodies, phi);
      for (const auto& [id, flat] : update.bodies)
        client_post_[static_cast<std::size_t>(id)] =
            unconcat(flat, post_layers_, client_post_[static_cast<std::size_t>(id)]);
      rec.fallback_clients = std::move(update.fallback_clients);
      if (config_.dump_similarity) similarity_.emplace_back(round, phi);
    }

    rec.mean_train_loss = mean_of(losses);
    maybe_evaluate(rec);
    maybe_checkpoint(round);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<RoundRecord> Simulator::run_baseline() {
  if (config_.strategy == Strategy::kFedCmd) fail(ErrorCode::kState, "run_baseline does not handle fedcmd");
  if (config_.strategy == Strategy::kFixedHead) {
    const auto layers = initial_.parameterized_layers();
    return run_federated_phase(layers.back(), initial_.params(), 1);
  }
  const bool local = config_.strategy == Strategy::kLocalOnly;
  stage_ = local ? Stage::kLocal : Stage::kGlobal;
  const auto all_layers = initial_.parameterized_layers();
  std::vector<RoundRecord> records;
  for (int round = 1; round <= config_.rounds; ++round) {
    RoundRecord rec;
    rec.round = round;
    rec.phase = Phase::kFederated;
    rec.sampled_clients = sample_clients(round, config_.join_ratio, config_.num_clients, sampling_seed_);
    const auto& sampled = rec.sampled_clients;

    nn::Model broadcast = initial_;
    broadcast.set_params(global_);
    if (!local) {
      for (int id : sampled) {
        Message m{Direction::kDown, Phase::kFederated, round, id, false, {}};
        add_views(m, broadcast, all_layers);
        rec.bytes_down += m.bytes();
        emit(m);
      }
    }

    std::vector<std::optional<LocalUpdate>> updates(sampled.size());
    parallel_for(sampled.size(), options_.threads, [&](std::size_t j) {
      const auto& st = states_[static_cast<std::size_t>(sampled[j])];
      updates[j] = client_update(st, local ? st.model : broadcast, config_.local_epochs, config_.lr,
                                 config_.batch_size, round);
    });

    std::vector<double> losses;
    std::vector<std::vector<float>> flats;
    for (std::size_t j = 0; j < sampled.size(); ++j) {
      auto& st = states_[static_cast<std::size_t>(sampled[j])];
      st.model = updates[j]->model;
      losses.push_back(updates[j]->train_loss);
      if (local) continue;
      Message m{Direction::kUp, Phase::kFederated, round, sampled[j], false, {}};
      add_views(m, st.model, all_layers);
      rec.bytes_up += m.bytes();
      emit(m);
      flats.push_back(concat(named_layers(st.model, all_layers), all_layers));
    }
    if (!local) {
      std::vector<aggregation::WeightedParams> inputs;
      for (std::size_t j = 0; j < sampled.size(); ++j)
        inputs.push_back(
            {flats[j], static_cast<double>(states_[static_cast<std::size_t>(sampled[j])].shard.train.size())});
      const auto avg = unconcat(aggregation::fedavg(inputs), all_layers, named_layers(initial_, all_layers));
      for (const auto& [n, v] : avg) global_[initial_.layer_index(n)] = v;
    }

    rec.mean_train_loss = mean_of(losses);
    maybe_evaluate(rec);
    maybe_checkpoint(round);
    records.push_back(std::move(rec));
  }
  return records;
}

RunResult Simulator::run() {
  RunResult result;
  result.config = config_;
  result.total_params = initial_.num_params();
  if (config_.strategy == Strategy::kFedCmd) {
    auto sel = run_selection_phase();
    result.rounds = std::move(sel.records);
    auto fed = run_federated_phase(sel.layer, sel.theta, config_.selection_rounds() + 1);
    result.rounds.insert(result.rounds.end(), fed.begin(), fed.end());
    result.head_layer = sel.layer;
  } else {
    result.rounds = run_baseline();
    if (config_.strategy == Strategy::kFixedHead) result.head_layer = initial_.parameterized_layers().back();
  }
  if (result.head_layer)
    result.head_params = initial_.params()[initial_.layer_index(*result.head_layer)].size();
  result.ledger = ledger_;
  result.final_evaluation = last_evaluation_ ? *last_evaluation_ : evaluate_all();
  result.handoff_bytes = handoff_bytes_;
  result.similarity = similarity_;
  return result;
}

}  // namespace fedcmd::fl
