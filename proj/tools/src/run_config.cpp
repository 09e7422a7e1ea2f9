// Copyright 2026 The LPL Authors. All Rights Reserved.
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

#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lpl/error.hpp"

namespace lpl::cli {

namespace {

using Json = nlohmann::json;

std::string_view format_name(DataFormat f) { return f == DataFormat::kCsv ? "csv" : "binary"; }

template <typename T>
T get_as(const Json& value, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      require(value.is_number_unsigned() || (value.is_number_integer() && value.get<long long>() >= 0),
              ErrorKind::kParameter, "config key '" + key + "' needs a non-negative integer");
    } else if constexpr (std::is_same_v<T, double>) {
      require(value.is_number(), ErrorKind::kParameter, "config key '" + key + "' needs a number");
    } else {
      require(value.is_string(), ErrorKind::kParameter, "config key '" + key + "' needs a string");
    }
    return value.get<T>();
  } catch (const Json::exception&) {
    fail(ErrorKind::kParameter, "config key '" + key + "' has the wrong type");
  }
}

}  // namespace

void RunConfig::propagate_seed() {
  synth.seed = seed;
  sof.seed = seed;
  train.seed = seed;
}

void RunConfig::validate() const {
  synth.validate();
  sof.validate();
  train.validate();
  parse_delta_grid(delta_grid);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "seed",          "data_format",     "seen_count",        "unseen_count",
      "attr_dim",      "feat_dim",        "train_per_class",   "test_per_class",
      "noise_scale",   "sigma",           "n",                 "alpha1",
      "alpha2",        "M",               "N",                 "tau",
      "lambda",        "epochs",          "episodes_per_epoch", "hidden_dim",
      "optimizer",     "learning_rate",   "mode",              "sof_epochs",
      "sof_batch_size", "sof_optimizer",  "sof_learning_rate", "sof_momentum",
      "tau_sof",       "delta_grid"};
  return keys;
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["data_format"] = format_name(c.data_format);
  j["seen_count"] = c.synth.seen_count;
  j["unseen_count"] = c.synth.unseen_count;
  j["attr_dim"] = c.synth.attr_dim;
  j["feat_dim"] = c.synth.feat_dim;
  j["train_per_class"] = c.synth.train_per_class;
  j["test_per_class"] = c.synth.test_per_class;
  j["noise_scale"] = c.synth.noise_scale;
  j["sigma"] = c.train.hallucination.sigma;
  j["n"] = c.train.hallucination.n;
  j["alpha1"] = c.train.hallucination.alpha1;
  j["alpha2"] = c.train.hallucination.alpha2;
  j["M"] = c.train.classes_per_episode;
  j["N"] = c.train.shots;
  j["tau"] = c.train.tau;
  j["lambda"] = c.train.lambda_real;
  j["epochs"] = c.train.epochs;
  j["episodes_per_epoch"] = c.train.episodes_per_epoch;
  j["hidden_dim"] = c.train.hidden_dim;
  j["optimizer"] = to_string(c.train.optimizer.kind);
  j["learning_rate"] = c.train.optimizer.learning_rate;
  j["mode"] = to_string(c.train.mode);
  j["sof_epochs"] = c.sof.epochs;
  j["sof_batch_size"] = c.sof.batch_size;
  j["sof_optimizer"] = to_string(c.sof.optimizer.kind);
  j["sof_learning_rate"] = c.sof.optimizer.learning_rate;
  j["sof_momentum"] = c.sof.optimizer.momentum;
  j["tau_sof"] = c.sof.tau;
  j["delta_grid"] = c.delta_grid;
  return j;
}

RunConfig config_from_json(const Json& j) {
  require(j.is_object(), ErrorKind::kParameter, "config must be a JSON object");
  const auto& keys = config_keys();
  for (const auto& [key, _] : j.items()) {
    require(std::find(keys.begin(), keys.end(), key) != keys.end(), ErrorKind::kParameter,
            "unknown config key '" + key + "'");
  }
  RunConfig c;
  auto read = [&](const char* key, auto& into) {
    if (j.contains(key)) into = get_as<std::decay_t<decltype(into)>>(j.at(key), key);
  };
  read("seed", c.seed);
  if (j.contains("data_format"))
    c.data_format = parse_data_format(get_as<std::string>(j.at("data_format"), "data_format"));
  read("seen_count", c.synth.seen_count);
  read("unseen_count", c.synth.unseen_count);
  read("attr_dim", c.synth.attr_dim);
  read("feat_dim", c.synth.feat_dim);
  read("train_per_class", c.synth.train_per_class);
  read("test_per_class", c.synth.test_per_class);
  read("noise_scale", c.synth.noise_scale);
  read("sigma", c.train.hallucination.sigma);
  read("n", c.train.hallucination.n);
  read("alpha1", c.train.hallucination.alpha1);
  read("alpha2", c.train.hallucination.alpha2);
  read("M", c.train.classes_per_episode);
  read("N", c.train.shots);
  read("tau", c.train.tau);
  read("lambda", c.train.lambda_real);
  read("epochs", c.train.epochs);
  read("episodes_per_epoch", c.train.episodes_per_epoch);
  read("hidden_dim", c.train.hidden_dim);
  if (j.contains("optimizer"))
    c.train.optimizer.kind = parse_optimizer_kind(get_as<std::string>(j.at("optimizer"), "optimizer"));
  read("learning_rate", c.train.optimizer.learning_rate);
  if (j.contains("mode")) c.train.mode = parse_train_mode(get_as<std::string>(j.at("mode"), "mode"));
  read("sof_epochs", c.sof.epochs);
  read("sof_batch_size", c.sof.batch_size);
  if (j.contains("sof_optimizer"))
    c.sof.optimizer.kind =
        parse_optimizer_kind(get_as<std::string>(j.at("sof_optimizer"), "sof_optimizer"));
  read("sof_learning_rate", c.sof.optimizer.learning_rate);
  read("sof_momentum", c.sof.optimizer.momentum);
  read("tau_sof", c.sof.tau);
  read("delta_grid", c.delta_grid);
  c.propagate_seed();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIo, "cannot read config " + path.string());
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::kParameter, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

namespace {

double parse_real(const std::string& text, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == text.size() && !text.empty() && std::isfinite(v), ErrorKind::kParameter,
          context + ": '" + text + "' is not a number");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

std::vector<double> parse_delta_grid(const std::string& spec) {
  std::vector<double> grid;
  const auto range = split(spec, ':');
  if (range.size() == 3) {
    const double lo = parse_real(range[0], "delta grid");
    const double hi = parse_real(range[1], "delta grid");
    const double step = parse_real(range[2], "delta grid");
    require(step > 0.0 && hi >= lo, ErrorKind::kParameter,
            "delta grid range needs lo <= hi and a positive step");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= count; ++i) {
      // Strip accumulated binary error so 0:1:0.02 yields 0.06, not 0.0600...01.
      grid.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
  } else {
    require(range.size() == 1, ErrorKind::kParameter, "bad delta grid '" + spec + "'");
    for (const auto& item : split(spec, ',')) grid.push_back(parse_real(item, "delta grid"));
  }
  require(!grid.empty(), ErrorKind::kParameter, "delta grid is empty");
  return grid;
}

std::vector<double> parse_value_list(const std::string& spec) {
  std::vector<double> out;
  for (const auto& item : split(spec, ',')) {
    const auto dots = item.find("..");
    if (dots != std::string::npos) {
      const double lo = parse_real(item.substr(0, dots), "value list");
      const double hi = parse_real(item.substr(dots + 2), "value list");
      require(lo == std::floor(lo) && hi == std::floor(hi) && lo <= hi, ErrorKind::kParameter,
              "range '" + item + "' needs integer bounds in order");
      for (double v = lo; v <= hi; v += 1.0) out.push_back(v);
    } else {
      out.push_back(parse_real(item, "value list"));
    }
  }
  require(!out.empty(), ErrorKind::kParameter, "empty value list");
  return out;
}

}  // namespace lpl::cli
