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

#include "commands.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "lpl/error.hpp"
#include "lpl/eval.hpp"
#include "lpl/matrix_io.hpp"

namespace lpl::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParameter:
    case ErrorKind::kUsage:
    case ErrorKind::kCapacity:
      return kExitConfig;
    case ErrorKind::kIo:
    case ErrorKind::kFormat:
    case ErrorKind::kValidation:
      return kExitMissingInput;
    case ErrorKind::kTraining:
    case ErrorKind::kNumeric:
      return kExitNumeric;
    case ErrorKind::kShape:
      return kExitShape;
  }
  return kExitConfig;
}

fs::path output_path(const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) {
    if (const char* root = std::getenv("LPL_OUTPUT_ROOT"); root && *root) p = fs::path(root) / p;
  }
  return p;
}

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
  return buf;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

const std::string& arg(const Invocation& inv, const std::string& key) {
  auto it = inv.args.find(key);
  require(it != inv.args.end() && !it->second.empty(), ErrorKind::kUsage,
          "command '" + inv.command + "' needs --" + key);
  return it->second;
}

std::optional<std::string> opt_arg(const Invocation& inv, const std::string& key) {
  auto it = inv.args.find(key);
  if (it == inv.args.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

void write_manifest(const fs::path& out, const Invocation& inv, const std::string& fingerprint,
                    const std::vector<std::string>& outputs, Json metrics, Clock::time_point start) {
  Json j;
  j["command"] = inv.command;
  j["argv"] = inv.argv;
  j["args"] = inv.args;
  j["config"] = to_json(inv.config);
  j["seed"] = inv.config.seed;
  j["dataset_fingerprint"] = fingerprint;
  j["outputs"] = outputs;
  j["metrics"] = std::move(metrics);
  j["duration_seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
  write_file_bytes(out / "manifest.json", j.dump(2) + "\n");
}

std::string trace_csv(const std::vector<double>& trace) {
  std::string out = "epoch,loss\n";
  for (std::size_t e = 0; e < trace.size(); ++e)
    out += std::to_string(e + 1) + "," + fmt_real(trace[e]) + "\n";
  return out;
}

// Stored refiners are float32, so refine with exactly the stored values.
SofResult run_sof(const SplitDataset& ds, const SofConfig& cfg) {
  SofResult r = train_sof(ds, cfg);
  r.params.refiner = quantize_to_float(r.params.refiner);
  r.params.projection = quantize_to_float(r.params.projection);
  return r;
}

Json report_json(const EvalReport& r) {
  Json j;
  auto put = [&](const char* k, const std::optional<double>& v) {
    j[k] = v ? Json(*v) : Json(nullptr);
  };
  put("T", r.T);
  put("U", r.U);
  put("S", r.S);
  put("H", r.H);
  j["delta"] = r.delta;
  return j;
}

}  // namespace

int cmd_synth(const Invocation& inv, const fs::path& out) {
  const auto start = Clock::now();
  const RunConfig& cfg = inv.config;
  for (const auto& w : cfg.synth.warnings()) std::cerr << "warning: " << w << "\n";
  const SplitDataset ds = generate_synthetic(cfg.synth);
  make_dir(out);
  save_dataset(ds, out, cfg.data_format);
  const DatasetFiles files = dataset_files(out, cfg.data_format);
  std::vector<std::string> outputs{files.features.string(), files.attributes.string(),
                                   files.split.string()};
  if (cfg.data_format == DataFormat::kBinary) outputs.push_back(labels_path_for(files.features).string());
  Json metrics;
  metrics["samples"] = ds.num_samples();
  metrics["seen_classes"] = ds.seen_classes.size();
  metrics["unseen_classes"] = ds.unseen_classes.size();
  metrics["train"] = ds.train_idx.size();
  metrics["test_seen"] = ds.test_seen_idx.size();
  metrics["test_unseen"] = ds.test_unseen_idx.size();
  write_manifest(out, inv, dataset_fingerprint(out), outputs, metrics, start);
  std::cout << "wrote " << ds.num_samples() << " samples (" << ds.seen_classes.size() << " seen / "
            << ds.unseen_classes.size() << " unseen classes) to " << out.string() << "\n";
  return kExitOk;
}

int cmd_train(const Invocation& inv, const fs::path& out) {
  const auto start = Clock::now();
  const RunConfig& cfg = inv.config;
  const fs::path data(arg(inv, "data"));
  SplitDataset ds = load_dataset(data);
  make_dir(out);
  std::vector<std::string> outputs;
  Json metrics;
  const bool sof = cfg.train.mode == TrainMode::kFull || opt_arg(inv, "sof") == "true";
  if (sof) {
    const SofResult r = run_sof(ds, cfg.sof);
    save_refiner(r, cfg.sof, out);
    write_file_bytes(out / "sof_loss.csv", trace_csv(r.loss_trace));
    for (const char* f : {"sof_refiner.lplf", "sof_projection.lplf", "sof.json", "sof_loss.csv"})
      outputs.push_back((out / f).string());
    metrics["sof_final_loss"] = r.loss_trace.empty() ? Json(nullptr) : Json(r.loss_trace.back());
    ds = refine_features(ds, r.params);
  }
  const PrototypeModel model = train_prototypes(ds, cfg.train);
  save_prototype_model(model, out);
  write_file_bytes(out / "loss_trace.csv", trace_csv(model.loss_trace));
  for (const char* f : {"h_w1.lplf", "h_b1.lplf", "h_w2.lplf", "h_b2.lplf", "model.json", "loss_trace.csv"})
    outputs.push_back((out / f).string());
  metrics["final_loss"] = model.loss_trace.empty() ? Json(nullptr) : Json(model.loss_trace.back());
  write_manifest(out, inv, dataset_fingerprint(data), outputs, metrics, start);
  std::cout << "trained mode " << to_string(cfg.train.mode) << (sof ? " with SoF" : "") << " for "
            << cfg.train.epochs << " epochs; model in " << out.string() << "\n";
  return kExitOk;
}

namespace {

struct ModelEval {
  SweepResult sweep;
  SimilarityMatrix seen;
  SimilarityMatrix unseen;
};

ModelEval evaluate_model_dir(const fs::path& model_dir, const SplitDataset& raw,
                             const std::vector<double>& grid) {
  const PrototypeModel model = load_prototype_model(model_dir);
  const SplitDataset ds = has_refiner(model_dir) ? refine_features(raw, load_refiner(model_dir)) : raw;
  ModelEval e;
  e.sweep = cs_sweep(model, ds, grid);
  e.seen = prototype_similarity(project_prototypes(model, ds.attributes, ds.seen_classes), ds.seen_classes);
  if (!ds.unseen_classes.empty()) {
    e.unseen = prototype_similarity(project_prototypes(model, ds.attributes, ds.unseen_classes),
                                    ds.unseen_classes);
  }
  return e;
}

void write_eval(const ModelEval& e, const fs::path& out, const std::string& suffix,
                std::vector<std::string>& outputs) {
  const EvalReport& best = e.sweep.reports[e.sweep.best_index];
  auto emit = [&](const std::string& stem, const std::string& body) {
    const fs::path p = out / (stem + suffix + ".csv");
    write_file_bytes(p, body);
    outputs.push_back(p.string());
  };
  emit("report", report_csv(best));
  emit("sweep", sweep_csv(e.sweep));
  emit("per_class", per_class_csv(best));
  emit("similarity_seen", similarity_csv(e.seen));
  if (!e.unseen.class_ids.empty()) emit("similarity_unseen", similarity_csv(e.unseen));
}

}  // namespace

int cmd_eval(const Invocation& inv, const fs::path& out) {
  const auto start = Clock::now();
  const fs::path data(arg(inv, "data"));
  const SplitDataset raw = load_dataset(data);
  const std::vector<double> grid = parse_delta_grid(inv.config.delta_grid);
  const fs::path model_dir(arg(inv, "model"));
  require(fs::exists(model_dir / "model.json"), ErrorKind::kIo,
          "no trained model in " + model_dir.string());
  const ModelEval primary = evaluate_model_dir(model_dir, raw, grid);
  std::optional<ModelEval> compare;
  if (auto other = opt_arg(inv, "compare")) {
    require(fs::exists(fs::path(*other) / "model.json"), ErrorKind::kIo,
            "no trained model in " + *other);
    compare = evaluate_model_dir(*other, raw, grid);
  }

  make_dir(out);
  std::vector<std::string> outputs;
  write_eval(primary, out, "", outputs);
  Json metrics = report_json(primary.sweep.reports[primary.sweep.best_index]);
  if (!primary.unseen.class_ids.empty())
    metrics["unseen_similarity"] = mean_off_diagonal(primary.unseen);
  if (compare) {
    write_eval(*compare, out, "_compare", outputs);
    metrics["compare"] = report_json(compare->sweep.reports[compare->sweep.best_index]);
  }
  write_manifest(out, inv, dataset_fingerprint(data), outputs, metrics, start);

  auto print = [](const char* name, const ModelEval& e) {
    const EvalReport& r = e.sweep.reports[e.sweep.best_index];
    std::cout << name << "T " << percent(r.T) << "  U " << percent(r.U) << "  S " << percent(r.S)
              << "  H " << percent(r.H) << "  (delta " << fmt_value(r.delta) << ")\n";
  };
  print("", primary);
  if (compare) print("compare: ", *compare);
  return kExitOk;
}

namespace {

struct AblationRow {
  const char* id;
  const char* label;
  TrainMode mode;
  bool refined;
};

constexpr AblationRow kAblationRows[] = {
    {"s2v", "S2V", TrainMode::kS2vBaseline, false},
    {"ep-ei", "S2V + EP & EI", TrainMode::kEpEi, false},
    {"sof", "S2V + SoF", TrainMode::kS2vBaseline, true},
    {"sof-ep", "S2V + SoF & EP", TrainMode::kEpOnly, true},
    {"full", "S2V + SoF & EP & EI", TrainMode::kFull, true},
};

struct Stat {
  double mean = 0.0;
  double spread = 0.0;
};

Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.spread = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

}  // namespace

int cmd_ablate(const Invocation& inv, const fs::path& out) {
  const auto start = Clock::now();
  const fs::path data(arg(inv, "data"));
  const SplitDataset raw = load_dataset(data);
  const std::size_t seeds = std::stoul(arg(inv, "seeds"));
  require(seeds >= 1, ErrorKind::kParameter, "--seeds must be at least 1");
  const std::vector<double> grid = parse_delta_grid(inv.config.delta_grid);

  constexpr std::size_t kRows = std::size(kAblationRows);
  // metrics[row][metric] over seeds; metric order T, U, S, H.
  std::vector<std::array<std::vector<double>, 4>> metrics(kRows);
  std::string runs = "config,seed,T,U,S,H,delta,unseen_similarity\n";
  for (std::size_t s = 0; s < seeds; ++s) {
    RunConfig cfg = inv.config;
    cfg.seed = inv.config.seed + s;
    cfg.propagate_seed();
    const SofResult sof = run_sof(raw, cfg.sof);
    const SplitDataset refined = refine_features(raw, sof.params);
    for (std::size_t r = 0; r < kRows; ++r) {
      const AblationRow& row = kAblationRows[r];
      TrainConfig tc = cfg.train;
      tc.mode = row.mode;
      const SplitDataset& ds = row.refined ? refined : raw;
      const PrototypeModel model = train_prototypes(ds, tc);
      const SweepResult sweep = cs_sweep(model, ds, grid);
      const EvalReport& best = sweep.reports[sweep.best_index];
      const std::optional<double>* values[] = {&best.T, &best.U, &best.S, &best.H};
      for (std::size_t m = 0; m < 4; ++m)
        if (*values[m]) metrics[r][m].push_back(**values[m]);
      double similarity = 0.0;
      if (!ds.unseen_classes.empty()) {
        similarity = mean_off_diagonal(prototype_similarity(
            project_prototypes(model, ds.attributes, ds.unseen_classes), ds.unseen_classes));
      }
      runs += std::string(row.id) + "," + std::to_string(cfg.seed);
      for (const auto* v : values) runs += "," + (*v ? fmt_real(**v) : std::string());
      runs += "," + fmt_real(best.delta) + "," + fmt_real(similarity) + "\n";
    }
  }

  std::string csv = "config,T_mean,T_spread,U_mean,U_spread,S_mean,S_spread,H_mean,H_spread\n";
  std::string text;
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %13s %13s %13s %13s\n", "config", "T", "U", "S", "H");
  text += line;
  Json summary = Json::object();
  for (std::size_t r = 0; r < kRows; ++r) {
    csv += kAblationRows[r].id;
    std::snprintf(line, sizeof line, "%-22s", kAblationRows[r].label);
    text += line;
    for (std::size_t m = 0; m < 4; ++m) {
      const Stat st = stat_of(metrics[r][m]);
      csv += "," + fmt_real(st.mean) + "," + fmt_real(st.spread);
      std::snprintf(line, sizeof line, " %6.1f +- %4.1f", 100.0 * st.mean, 100.0 * st.spread);
      text += line;
      summary[kAblationRows[r].id][std::string(1, "TUSH"[m])] = st.mean;
    }
    csv += "\n";
    text += "\n";
  }

  make_dir(out);
  write_file_bytes(out / "ablation.csv", csv);
  write_file_bytes(out / "ablation.txt", text);
  write_file_bytes(out / "runs.csv", runs);
  write_manifest(out, inv, dataset_fingerprint(data),
                 {(out / "ablation.csv").string(), (out / "ablation.txt").string(),
                  (out / "runs.csv").string()},
                 summary, start);
  std::cout << text;
  return kExitOk;
}

int cmd_sweep(const Invocation& inv, const fs::path& out) {
  const auto start = Clock::now();
  const std::string& param = arg(inv, "param");
  require(param == "n" || param == "sigma", ErrorKind::kParameter,
          "unknown sweep parameter '" + param + "' (expected n or sigma)");
  const std::vector<double> values = parse_value_list(arg(inv, "values"));
  const RunConfig& cfg = inv.config;

  std::vector<TrainConfig> configs;
  for (double v : values) {
    TrainConfig tc = cfg.train;
    if (param == "n") {
      require(v >= 0.0 && v == std::floor(v), ErrorKind::kParameter,
              "n must be a non-negative integer, got " + fmt_value(v));
      tc.hallucination.n = static_cast<std::size_t>(v);
    } else {
      tc.hallucination.sigma = v;
    }
    tc.validate();
    configs.push_back(tc);
  }

  const fs::path data(arg(inv, "data"));
  SplitDataset ds = load_dataset(data);
  const std::vector<double> grid = parse_delta_grid(cfg.delta_grid);
  if (cfg.train.mode == TrainMode::kFull) ds = refine_features(ds, run_sof(ds, cfg.sof).params);

  std::string csv = "value,T,H\n";
  Json rows = Json::array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const PrototypeModel model = train_prototypes(ds, configs[i]);
    const SweepResult sweep = cs_sweep(model, ds, grid);
    const EvalReport& best = sweep.reports[sweep.best_index];
    csv += fmt_value(values[i]) + "," + (best.T ? fmt_real(*best.T) : "") + "," +
           (best.H ? fmt_real(*best.H) : "") + "\n";
    Json r = report_json(best);
    r["value"] = values[i];
    rows.push_back(r);
    std::cout << param << "=" << fmt_value(values[i]) << "  T " << percent(best.T) << "  H "
              << percent(best.H) << "\n";
  }
  make_dir(out);
  write_file_bytes(out / "sweep.csv", csv);
  write_manifest(out, inv, dataset_fingerprint(data), {(out / "sweep.csv").string()}, rows, start);
  return kExitOk;
}

int run(const Invocation& inv, const fs::path& out) {
  if (inv.command == "synth") return cmd_synth(inv, out);
  if (inv.command == "train") return cmd_train(inv, out);
  if (inv.command == "eval") return cmd_eval(inv, out);
  if (inv.command == "ablate") return cmd_ablate(inv, out);
  if (inv.command == "sweep") return cmd_sweep(inv, out);
  fail(ErrorKind::kUsage, "unknown command '" + inv.command + "'");
}

int cmd_replay(const fs::path& manifest, const fs::path& out) {
  const std::string text = read_file_bytes(manifest);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, manifest.string() + ": " + e.what());
  }
  require(j.contains("command") && j.contains("config") && j.contains("args"), ErrorKind::kFormat,
          manifest.string() + ": not a run manifest");
  Invocation inv;
  inv.command = j.at("command").get<std::string>();
  inv.config = config_from_json(j.at("config"));
  inv.args = j.at("args").get<std::map<std::string, std::string>>();
  inv.argv = j.at("argv").get<std::vector<std::string>>();
  return run(inv, out);
}

namespace {

std::string absolute_or_empty(const std::string& p) {
  return p.empty() ? p : fs::absolute(p).lexically_normal().string();
}

}  // namespace

int main_entry(int argc, char** argv) {
  CLI::App app{"Placeholder prototype learning for zero-shot recognition"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("lpl 0.1.0"));

  std::string config_path, out, data, mode, model, compare, delta_grid, param, values, manifest;
  std::string format;
  std::optional<std::uint64_t> seed;
  std::size_t seeds = 5;
  bool with_sof = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the configured seed");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark");
  add_common(synth);
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--format", format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}));

  auto* train = app.add_subcommand("train", "Run SoF when needed and train prototypes");
  add_common(train);
  train->add_option("--data", data, "Dataset directory")->required();
  train->add_option("--out", out, "Model directory")->required();
  train->add_option("--mode", mode, "s2v, ep, ep-ei or full")
      ->check(CLI::IsMember({"s2v", "ep", "ep-ei", "full", "s2v_baseline", "ep_only", "ep_ei"}));
  train->add_flag("--sof", with_sof, "Refine features with SoF in any mode");

  auto* eval = app.add_subcommand("eval", "Evaluate a trained model");
  add_common(eval);
  eval->add_option("--model", model, "Model directory")->required();
  eval->add_option("--compare", compare, "Second model for paired similarity matrices");
  eval->add_option("--data", data, "Dataset directory")->required();
  eval->add_option("--out", out, "Output directory (default: <model>/eval)");
  eval->add_option("--delta-grid", delta_grid, "Single value, list a,b,c or range lo:hi:step");

  auto* ablate = app.add_subcommand("ablate", "Run the five-configuration ablation");
  add_common(ablate);
  ablate->add_option("--data", data, "Dataset directory")->required();
  ablate->add_option("--out", out, "Output directory")->required();
  ablate->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "Sweep n or sigma");
  add_common(sweep);
  sweep->add_option("--data", data, "Dataset directory")->required();
  sweep->add_option("--out", out, "Output directory")->required();
  sweep->add_option("--param", param, "n or sigma")->required()->check(CLI::IsMember({"n", "sigma"}));
  sweep->add_option("--values", values, "Comma-separated values; a..b for integer ranges")->required();

  auto* replay = app.add_subcommand("replay", "Re-execute a run from its manifest");
  replay->add_option("--manifest", manifest, "manifest.json of a previous run")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (replay->parsed()) return cmd_replay(manifest, output_path(out));

    Invocation inv;
    inv.argv.assign(argv, argv + argc);
    inv.command = app.get_subcommands().front()->get_name();
    if (!config_path.empty()) inv.config = load_config(config_path);
    if (seed) inv.config.seed = *seed;
    if (!format.empty()) inv.config.data_format = parse_data_format(format);
    if (!mode.empty()) inv.config.train.mode = parse_train_mode(mode);
    if (!delta_grid.empty()) inv.config.delta_grid = delta_grid;
    inv.config.propagate_seed();
    inv.config.validate();

    if (!data.empty()) inv.args["data"] = absolute_or_empty(data);
    if (!model.empty()) inv.args["model"] = absolute_or_empty(model);
    if (!compare.empty()) inv.args["compare"] = absolute_or_empty(compare);
    if (inv.command == "train") inv.args["sof"] = with_sof ? "true" : "false";
    if (inv.command == "ablate") inv.args["seeds"] = std::to_string(seeds);
    if (inv.command == "sweep") {
      inv.args["param"] = param;
      inv.args["values"] = values;
    }
    const fs::path target =
        out.empty() ? fs::path(inv.args["model"]) / "eval" : output_path(out);
    return run(inv, target);
  } catch (const Error& e) {
    std::cerr << "lpl: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "lpl: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace lpl::cli
