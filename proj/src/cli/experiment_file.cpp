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

#include "cli/experiment_file.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "data/idx.hpp"

namespace fedcmd::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) fail(ErrorCode::kConfig, "invalid value '" + v + "' for key '" + key + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorCode::kConfig, "invalid value '" + v + "' for key '" + key + "' (expected true or false)");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  if (v.empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  return out;
}

using Setter = std::function<void(ExperimentFile&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"strategy", [](auto& f, auto&, auto& v) { f.run.strategy = fl::parse_strategy(v); }},
      {"rounds", [](auto& f, auto& k, auto& v) { f.run.rounds = parse_number<int>(k, v); }},
      {"rho", [](auto& f, auto& k, auto& v) { f.run.rho = parse_number<double>(k, v); }},
      {"join_ratio", [](auto& f, auto& k, auto& v) { f.run.join_ratio = parse_number<double>(k, v); }},
      {"local_epochs", [](auto& f, auto& k, auto& v) { f.run.local_epochs = parse_number<int>(k, v); }},
      {"batch_size", [](auto& f, auto& k, auto& v) { f.run.batch_size = parse_number<int>(k, v); }},
      {"lr", [](auto& f, auto& k, auto& v) { f.run.lr = parse_number<double>(k, v); }},
      {"num_clients", [](auto& f, auto& k, auto& v) { f.run.num_clients = parse_number<int>(k, v); }},
      {"alpha", [](auto& f, auto& k, auto& v) { f.run.alpha = parse_number<double>(k, v); }},
      {"seed", [](auto& f, auto& k, auto& v) { f.run.seed = parse_number<std::uint64_t>(k, v); }},
      {"data_seed", [](auto& f, auto& k, auto& v) { f.run.data_seed = parse_number<std::uint64_t>(k, v); }},
      {"sampling_seed", [](auto& f, auto& k, auto& v) { f.run.sampling_seed = parse_number<std::uint64_t>(k, v); }},
      {"model", [](auto& f, auto&, auto& v) { f.run.model = v; }},
      {"hidden", [](auto& f, auto& k, auto& v) { f.run.hidden = parse_int_list(k, v); }},
      {"split_mode", [](auto& f, auto&, auto& v) { f.run.split_mode = fl::parse_split_mode(v); }},
      {"epsilon", [](auto& f, auto& k, auto& v) { f.run.epsilon = parse_number<double>(k, v); }},
      {"label_encoding", [](auto& f, auto&, auto& v) { f.run.label_encoding = fl::parse_label_encoding(v); }},
      {"eval_every", [](auto& f, auto& k, auto& v) { f.run.eval_every = parse_number<int>(k, v); }},
      {"checkpoint_every", [](auto& f, auto& k, auto& v) { f.run.checkpoint_every = parse_number<int>(k, v); }},
      {"dump_similarity", [](auto& f, auto& k, auto& v) { f.run.dump_similarity = parse_bool(k, v); }},
      {"dataset",
       [](auto& f, auto& k, auto& v) {
         if (v == "synthetic")
           f.data.kind = DataSource::Kind::kSynthetic;
         else if (v == "idx")
           f.data.kind = DataSource::Kind::kIdx;
         else
           fail(ErrorCode::kConfig, "invalid value '" + v + "' for key '" + k + "' (expected synthetic or idx)");
       }},
      {"synthetic.classes", [](auto& f, auto& k, auto& v) { f.data.classes = parse_number<int>(k, v); }},
      {"synthetic.samples_per_class",
       [](auto& f, auto& k, auto& v) { f.data.samples_per_class = parse_number<int>(k, v); }},
      {"synthetic.shape", [](auto& f, auto&, auto& v) { f.data.shape = parse_shape(v); }},
      {"synthetic.separation", [](auto& f, auto& k, auto& v) { f.data.separation = parse_number<double>(k, v); }},
      {"idx.images", [](auto& f, auto&, auto& v) { f.data.idx_images = v; }},
      {"idx.labels", [](auto& f, auto&, auto& v) { f.data.idx_labels = v; }},
      {"output_dir", [](auto& f, auto&, auto& v) { f.output_dir = v; }},
  };
  return table;
}

std::string shape_text(const nn::Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out;
}

}  // namespace

std::string DataSource::descriptor() const {
  if (kind == Kind::kIdx) return "idx(images=" + idx_images + ", labels=" + idx_labels + ")";
  return "synthetic(classes=" + std::to_string(classes) + ", samples_per_class=" + std::to_string(samples_per_class) +
         ", shape=" + shape_text(shape) + ", separation=" + fmt(separation) + ")";
}

nn::Shape parse_shape(const std::string& text) {
  nn::Shape shape;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, 'x')) {
    const int d = parse_number<int>("synthetic.shape", trim(item));
    if (d < 1) fail(ErrorCode::kConfig, "shape dimensions must be positive, got '" + text + "'");
    shape.push_back(d);
  }
  if (shape.empty()) fail(ErrorCode::kConfig, "empty shape");
  return shape;
}

ExperimentFile parse_experiment(const std::string& text) {
  ExperimentFile file;
  std::set<std::string> seen;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end())
      fail(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second)
      fail(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    try {
      it->second(file, key, value);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return file;
}

void apply_setting(ExperimentFile& file, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) fail(ErrorCode::kConfig, "unknown key '" + key + "'");
  it->second(file, key, value);
}

ExperimentFile load_experiment(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str());
}

std::string serialize_experiment(const ExperimentFile& f) {
  const auto& r = f.run;
  std::ostringstream out;
  out << "strategy = " << fl::to_string(r.strategy) << '\n';
  out << "rounds = " << r.rounds << '\n';
  out << "rho = " << fmt(r.rho) << '\n';
  out << "join_ratio = " << fmt(r.join_ratio) << '\n';
  out << "local_epochs = " << r.local_epochs << '\n';
  out << "batch_size = " << r.batch_size << '\n';
  out << "lr = " << fmt(r.lr) << '\n';
  out << "num_clients = " << r.num_clients << '\n';
  out << "alpha = " << fmt(r.alpha) << '\n';
  out << "seed = " << r.seed << '\n';
  if (r.data_seed) out << "data_seed = " << *r.data_seed << '\n';
  if (r.sampling_seed) out << "sampling_seed = " << *r.sampling_seed << '\n';
  out << "model = " << r.model << '\n';
  out << "hidden = ";
  for (std::size_t i = 0; i < r.hidden.size(); ++i) out << (i ? "," : "") << r.hidden[i];
  out << '\n';
  out << "split_mode = " << fl::to_string(r.split_mode) << '\n';
  out << "epsilon = " << fmt(r.epsilon) << '\n';
  out << "label_encoding = " << fl::to_string(r.label_encoding) << '\n';
  out << "eval_every = " << r.eval_every << '\n';
  out << "checkpoint_every = " << r.checkpoint_every << '\n';
  out << "dump_similarity = " << (r.dump_similarity ? "true" : "false") << '\n';
  out << "dataset = " << (f.data.kind == DataSource::Kind::kSynthetic ? "synthetic" : "idx") << '\n';
  out << "synthetic.classes = " << f.data.classes << '\n';
  out << "synthetic.samples_per_class = " << f.data.samples_per_class << '\n';
  out << "synthetic.shape = " << shape_text(f.data.shape) << '\n';
  out << "synthetic.separation = " << fmt(f.data.separation) << '\n';
  if (!f.data.idx_images.empty()) out << "idx.images = " << f.data.idx_images << '\n';
  if (!f.data.idx_labels.empty()) out << "idx.labels = " << f.data.idx_labels << '\n';
  out << "output_dir = " << f.output_dir << '\n';
  return out.str();
}

data::Dataset load_dataset(const DataSource& source, std::uint64_t data_seed) {
  if (source.kind == DataSource::Kind::kIdx) {
    if (source.idx_images.empty() || source.idx_labels.empty())
      fail(ErrorCode::kConfig, "dataset = idx needs idx.images and idx.labels");
    return data::load_idx(source.idx_images, source.idx_labels);
  }
  if (source.classes < 2) fail(ErrorCode::kConfig, "synthetic.classes must be >= 2");
  if (source.samples_per_class < 1) fail(ErrorCode::kConfig, "synthetic.samples_per_class must be >= 1");
  data::SyntheticOptions opt;
  opt.num_classes = source.classes;
  opt.samples_per_class = source.samples_per_class;
  opt.input_shape = source.shape;
  opt.class_separation = source.separation;
  opt.seed = derive_seed(data_seed, {seed_tag::kData});
  return data::generate_synthetic(opt);
}

}  // namespace fedcmd::cli
