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

#include "fl/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "common/error.hpp"
#include "fl/comm.hpp"

namespace fedcmd::fl {

namespace {

using ojson = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

}  // namespace

ojson config_to_json(const RunConfig& c) {
  ojson j;
  j["strategy"] = std::string(to_string(c.strategy));
  j["rounds"] = c.rounds;
  j["rho"] = c.rho;
  j["selection_rounds"] = c.selection_rounds();
  j["join_ratio"] = c.join_ratio;
  j["clients_per_round"] = c.clients_per_round();
  j["local_epochs"] = c.local_epochs;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["num_clients"] = c.num_clients;
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  j["data_seed"] = c.resolved_data_seed();
  j["sampling_seed"] = c.resolved_sampling_seed();
  j["model"] = c.model;
  j["hidden"] = c.hidden;
  j["split_mode"] = std::string(to_string(c.split_mode));
  j["epsilon"] = c.epsilon;
  j["label_encoding"] = std::string(to_string(c.label_encoding));
  j["eval_every"] = c.eval_every;
  j["checkpoint_every"] = c.checkpoint_every;
  j["dump_similarity"] = c.dump_similarity;
  return j;
}

ojson report_json(const RunResult& r) {
  ojson j;
  j["format"] = kReportFormat;
  j["version"] = kReportVersion;
  j["dataset"] = r.dataset_descriptor;
  j["config"] = config_to_json(r.config);
  j["parameters"] = {{"total", r.total_params}, {"head", r.head_params}};
  j["head_layer"] = r.head_layer ? ojson(*r.head_layer) : ojson(nullptr);

  if (r.ledger) {
    ojson ledger;
    ledger["layer_order"] = r.ledger->layer_order();
    ledger["required_rounds"] = r.ledger->required_rounds();
    ojson rounds = ojson::array();
    for (const auto& [round, votes] : r.ledger->votes()) {
      ojson v = ojson::object();
      for (const auto& [client, layer] : votes) v[std::to_string(client)] = layer;
      rounds.push_back({{"round", round}, {"votes", v}, {"winner", r.ledger->winners().at(round)}});
    }
    ledger["rounds"] = rounds;
    ledger["final"] = r.ledger->final_layer() ? ojson(*r.ledger->final_layer()) : ojson(nullptr);
    j["vote_ledger"] = ledger;
  } else {
    j["vote_ledger"] = nullptr;
  }

  const auto measured = account_communication(r.rounds);
  ojson rounds = ojson::array();
  for (std::size_t i = 0; i < r.rounds.size(); ++i) {
    const auto& rec = r.rounds[i];
    ojson o;
    o["round"] = rec.round;
    o["phase"] = phase_name(rec.phase);
    o["sampled_clients"] = rec.sampled_clients;
    o["mean_accuracy"] = optional_json(rec.mean_accuracy);
    o["std_accuracy"] = optional_json(rec.std_accuracy);
    o["mean_train_loss"] = rec.mean_train_loss;
    o["bytes_up"] = rec.bytes_up;
    o["bytes_down"] = rec.bytes_down;
    o["similarity_probe_bytes"] = rec.similarity_probe_bytes;
    o["cumulative_bytes"] = measured[i];
    o["winner"] = rec.winner ? ojson(*rec.winner) : ojson(nullptr);
    o["fallback_clients"] = rec.fallback_clients;
    rounds.push_back(o);
  }
  j["rounds"] = rounds;

  const auto& ev = r.final_evaluation;
  j["final_accuracy"] = {{"mean", ev.mean}, {"std", ev.std}, {"per_client", ev.per_client}};
  ojson per_class = ojson::array();
  for (std::size_t c = 0; c < ev.class_total.size(); ++c) {
    const double acc = ev.class_total[c] ? static_cast<double>(ev.class_correct[c]) / ev.class_total[c] : 0.0;
    per_class.push_back(
        {{"class", c}, {"test_samples", ev.class_total[c]}, {"correct", ev.class_correct[c]}, {"accuracy", acc}});
  }
  j["per_class_accuracy"] = per_class;

  const auto predicted = predict_communication(r.config, r.total_params, r.head_params);
  std::uint64_t probe = 0;
  for (const auto& rec : r.rounds) probe += rec.similarity_probe_bytes;
  const std::uint64_t total = measured.empty() ? 0 : measured.back();
  ojson comm;
  comm["measured_total_bytes"] = total;
  comm["predicted_total_bytes"] = predicted.total;
  comm["matches_prediction"] = total == predicted.total && measured == predicted.cumulative;
  comm["formula"] = predicted.formula;
  comm["similarity_probe_bytes"] = probe;
  comm["phase_handoff_bytes"] = r.handoff_bytes;
  j["communication"] = comm;
  return j;
}

std::string report_text(const RunResult& result) { return report_json(result).dump(2) + "\n"; }

std::string rounds_csv(const RunResult& r) {
  std::ostringstream out;
  out << "round,phase,sampled_clients,mean_accuracy,std_accuracy,mean_train_loss,bytes_up,bytes_down,"
         "similarity_probe_bytes,cumulative_bytes,winner\n";
  const auto cumulative = account_communication(r.rounds);
  for (std::size_t i = 0; i < r.rounds.size(); ++i) {
    const auto& rec = r.rounds[i];
    std::string ids;
    for (std::size_t k = 0; k < rec.sampled_clients.size(); ++k) {
      if (k) ids += ';';
      ids += std::to_string(rec.sampled_clients[k]);
    }
    out << rec.round << ',' << phase_name(rec.phase) << ',' << ids << ','
        << (rec.mean_accuracy ? fmt(*rec.mean_accuracy) : "") << ','
        << (rec.std_accuracy ? fmt(*rec.std_accuracy) : "") << ',' << fmt(rec.mean_train_loss) << ','
        << rec.bytes_up << ',' << rec.bytes_down << ',' << rec.similarity_probe_bytes << ',' << cumulative[i]
        << ',' << (rec.winner ? *rec.winner : "") << '\n';
  }
  return out.str();
}

void write_run_outputs(const RunResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "report.json", report_text(result));
  write_file(dir / "rounds.csv", rounds_csv(result));
  if (!result.similarity.empty()) {
    std::filesystem::create_directories(dir / "similarity");
    for (const auto& [round, phi] : result.similarity) {
      char name[32];
      std::snprintf(name, sizeof name, "round_%04d.csv", round);
      write_file(dir / "similarity" / name, aggregation::similarity_csv(phi));
    }
  }
}

}  // namespace fedcmd::fl
