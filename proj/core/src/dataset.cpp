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

#include "lpl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lpl/error.hpp"
#include "lpl/matrix_io.hpp"

namespace lpl {

namespace fs = std::filesystem;

AttributeTable AttributeTable::normalized(Matrix values) {
  for (std::size_t r = 0; r < values.rows(); ++r) {
    auto row = values.row(r);
    const double norm = l2_norm(row);
    require(norm > 0.0 && std::isfinite(norm), ErrorKind::kValidation,
            "attribute row of class " + std::to_string(r) + " has zero norm");
    if (std::abs(norm - 1.0) > 1e-6) {
      for (double& x : row) x /= norm;
    }
  }
  return AttributeTable{std::move(values)};
}

namespace {

std::string id_list(const std::vector<std::size_t>& ids) {
  std::string s;
  for (std::size_t id : ids) {
    if (!s.empty()) s += ' ';
    s += std::to_string(id);
  }
  return s;
}

}  // namespace

void SplitDataset::validate() const {
  const std::size_t n = features.rows();
  const std::size_t L = attributes.num_classes();
  require(labels.size() == n, ErrorKind::kValidation,
          std::to_string(labels.size()) + " labels for " + std::to_string(n) + " samples");
  require(L >= 1, ErrorKind::kValidation, "attribute table is empty");
  require(features.all_finite(), ErrorKind::kValidation, "features contain non-finite values");
  require(attributes.values.all_finite(), ErrorKind::kValidation,
          "attributes contain non-finite values");
  for (std::size_t k = 0; k < L; ++k) {
    require(l2_norm(attributes.row(k)) > 0.0, ErrorKind::kValidation,
            "attribute row of class " + std::to_string(k) + " has zero norm");
  }
  for (std::size_t i = 0; i < n; ++i) {
    require(labels[i] < L, ErrorKind::kValidation,
            "sample " + std::to_string(i) + " has label " + std::to_string(labels[i]) +
                " but only " + std::to_string(L) + " classes exist");
  }

  std::vector<int> class_role(L, 0);
  auto mark_classes = [&](const std::vector<std::size_t>& ids, int role, const char* name) {
    for (std::size_t id : ids) {
      require(id < L, ErrorKind::kValidation,
              std::string(name) + " class id " + std::to_string(id) + " is out of range (" +
                  std::to_string(L) + " classes)");
      require(class_role[id] == 0, ErrorKind::kValidation,
              "class id " + std::to_string(id) + " listed twice across seen/unseen");
      class_role[id] = role;
    }
  };
  mark_classes(seen_classes, 1, "seen");
  mark_classes(unseen_classes, 2, "unseen");

  std::vector<int> sample_role(n, 0);
  auto mark_samples = [&](const std::vector<std::size_t>& idx, int role, int class_kind,
                          const char* name) {
    for (std::size_t i : idx) {
      require(i < n, ErrorKind::kValidation,
              std::string(name) + " index " + std::to_string(i) + " is out of range (" +
                  std::to_string(n) + " samples)");
      require(sample_role[i] == 0, ErrorKind::kValidation,
              "sample " + std::to_string(i) + " appears in more than one index set");
      sample_role[i] = role;
      require(class_role[labels[i]] == class_kind, ErrorKind::kValidation,
              std::string(name) + " sample " + std::to_string(i) + " has label " +
                  std::to_string(labels[i]) + " which is not a " +
                  (class_kind == 1 ? "seen" : "unseen") + " class");
    }
  };
  mark_samples(train_idx, 1, 1, "train");
  mark_samples(test_seen_idx, 2, 1, "test_seen");
  mark_samples(test_unseen_idx, 3, 2, "test_unseen");
}

DataFormat parse_data_format(std::string_view name) {
  if (name == "csv") return DataFormat::kCsv;
  if (name == "binary" || name == "lplf") return DataFormat::kBinary;
  fail(ErrorKind::kParameter, "unknown data format '" + std::string(name) + "'");
}

fs::path labels_path_for(const fs::path& features_path) {
  fs::path p = features_path;
  p.replace_extension(".labels.lplf");
  return p;
}

DatasetFiles dataset_files(const fs::path& dir, DataFormat format) {
  if (format == DataFormat::kCsv) {
    return {dir / "features.csv", dir / "attributes.csv", dir / "split.txt", {}};
  }
  return {dir / "features.lplf", dir / "attributes.lplf", dir / "split.txt",
          labels_path_for(dir / "features.lplf")};
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string location(const fs::path& path, std::size_t line, std::size_t column) {
  return path.string() + ":" + std::to_string(line) + ": column " + std::to_string(column);
}

double parse_real(std::string_view text, const fs::path& path, std::size_t line,
                  std::size_t column) {
  text = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(v),
          ErrorKind::kFormat,
          location(path, line, column) + ": expected a real number, got '" + std::string(text) + "'");
  return v;
}

std::size_t parse_count(std::string_view text, const fs::path& path, std::size_t line,
                        std::size_t column) {
  text = trim(text);
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size() && !text.empty(),
          ErrorKind::kFormat,
          location(path, line, column) + ": expected a non-negative integer, got '" +
              std::string(text) + "'");
  return v;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// Table with a header of the form `<lead...>,<prefix>0,...,<prefix>{k-1}`.
struct CsvTable {
  std::vector<std::vector<std::size_t>> keys;
  Matrix values;
};

CsvTable read_csv_table(const fs::path& path, const std::vector<std::string>& lead,
                        const std::string& prefix) {
  const auto lines = read_lines(path);
  require(!lines.empty(), ErrorKind::kFormat, path.string() + ":1: missing header row");
  const auto header = split_fields(trim(lines[0]), ',');
  require(header.size() > lead.size(), ErrorKind::kFormat,
          path.string() + ":1: header has no value columns");
  for (std::size_t c = 0; c < lead.size(); ++c) {
    require(trim(header[c]) == lead[c], ErrorKind::kFormat,
            location(path, 1, c + 1) + ": expected '" + lead[c] + "', got '" +
                std::string(trim(header[c])) + "'");
  }
  const std::size_t width = header.size() - lead.size();
  for (std::size_t c = 0; c < width; ++c) {
    const std::string want = prefix + std::to_string(c);
    require(trim(header[lead.size() + c]) == want, ErrorKind::kFormat,
            location(path, 1, lead.size() + c + 1) + ": expected '" + want + "', got '" +
                std::string(trim(header[lead.size() + c])) + "'");
  }

  CsvTable table;
  std::vector<double> data;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    std::string_view line = trim(lines[li]);
    if (line.empty()) continue;
    const auto fields = split_fields(line, ',');
    require(fields.size() == header.size(), ErrorKind::kFormat,
            path.string() + ":" + std::to_string(li + 1) + ": expected " +
                std::to_string(header.size()) + " columns, found " + std::to_string(fields.size()));
    std::vector<std::size_t> key;
    for (std::size_t c = 0; c < lead.size(); ++c) key.push_back(parse_count(fields[c], path, li + 1, c + 1));
    table.keys.push_back(std::move(key));
    for (std::size_t c = lead.size(); c < fields.size(); ++c)
      data.push_back(parse_real(fields[c], path, li + 1, c + 1));
  }
  table.values = Matrix(table.keys.size(), width, std::move(data));
  return table;
}

struct SplitLists {
  std::vector<std::size_t> seen, unseen, train, test_seen, test_unseen;
};

SplitLists read_split(const fs::path& path) {
  const auto lines = read_lines(path);
  SplitLists s;
  std::map<std::string, std::vector<std::size_t>*> slots = {
      {"seen", &s.seen},   {"unseen", &s.unseen},         {"train", &s.train},
      {"test_seen", &s.test_seen}, {"test_unseen", &s.test_unseen}};
  std::set<std::string> found;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    std::string_view line = trim(lines[li]);
    if (line.empty() || line.front() == '#') continue;
    const auto colon = line.find(':');
    require(colon != std::string_view::npos, ErrorKind::kFormat,
            path.string() + ":" + std::to_string(li + 1) + ": expected '<list>: <ids>'");
    const std::string key(trim(line.substr(0, colon)));
    auto slot = slots.find(key);
    require(slot != slots.end(), ErrorKind::kFormat,
            path.string() + ":" + std::to_string(li + 1) + ": unknown list '" + key + "'");
    require(found.insert(key).second, ErrorKind::kFormat,
            path.string() + ":" + std::to_string(li + 1) + ": list '" + key + "' repeated");
    std::string rest(line.substr(colon + 1));
    std::replace(rest.begin(), rest.end(), ',', ' ');
    std::istringstream tokens(rest);
    std::string tok;
    std::size_t column = 0;
    while (tokens >> tok) slot->second->push_back(parse_count(tok, path, li + 1, ++column));
  }
  for (const auto& [key, _] : slots) {
    require(found.count(key) == 1, ErrorKind::kFormat,
            path.string() + ": missing list '" + key + "'");
  }
  return s;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string render_split(const SplitDataset& ds) {
  std::string out;
  out += "seen: " + id_list(ds.seen_classes) + "\n";
  out += "unseen: " + id_list(ds.unseen_classes) + "\n";
  out += "train: " + id_list(ds.train_idx) + "\n";
  out += "test_seen: " + id_list(ds.test_seen_idx) + "\n";
  out += "test_unseen: " + id_list(ds.test_unseen_idx) + "\n";
  return out;
}

std::string render_csv(const Matrix& m, const std::string& lead_header, const std::string& prefix,
                       const std::vector<std::string>& leads) {
  std::string out = lead_header;
  for (std::size_t c = 0; c < m.cols(); ++c) out += "," + prefix + std::to_string(c);
  out += "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += leads[r];
    for (double v : m.row(r)) out += "," + format_real(v);
    out += "\n";
  }
  return out;
}

}  // namespace

SplitDataset load_dataset(const fs::path& features_path, const fs::path& attributes_path,
                          const fs::path& split_path, DataFormat format) {
  for (const auto& p : {features_path, attributes_path, split_path}) {
    require(fs::exists(p), ErrorKind::kIo, "missing dataset file " + p.string());
  }
  SplitDataset ds;
  Matrix attributes;
  if (format == DataFormat::kCsv) {
    CsvTable feats = read_csv_table(features_path, {"id", "label"}, "f");
    for (std::size_t r = 0; r < feats.keys.size(); ++r) {
      require(feats.keys[r][0] == r, ErrorKind::kFormat,
              location(features_path, r + 2, 1) + ": sample id " + std::to_string(feats.keys[r][0]) +
                  " out of order, expected " + std::to_string(r));
      ds.labels.push_back(feats.keys[r][1]);
    }
    ds.features = std::move(feats.values);
    CsvTable attrs = read_csv_table(attributes_path, {"class_id"}, "a");
    for (std::size_t r = 0; r < attrs.keys.size(); ++r) {
      require(attrs.keys[r][0] == r, ErrorKind::kFormat,
              location(attributes_path, r + 2, 1) + ": class id " +
                  std::to_string(attrs.keys[r][0]) + " out of order, expected " + std::to_string(r));
    }
    attributes = std::move(attrs.values);
  } else {
    ds.features = read_lplf(features_path);
    const fs::path labels_path = labels_path_for(features_path);
    require(fs::exists(labels_path), ErrorKind::kIo, "missing dataset file " + labels_path.string());
    const Matrix labels = read_lplf(labels_path);
    require(labels.cols() == 1 && labels.rows() == ds.features.rows(), ErrorKind::kFormat,
            labels_path.string() + ": expected " + std::to_string(ds.features.rows()) +
                "x1 labels, found " + std::to_string(labels.rows()) + "x" +
                std::to_string(labels.cols()));
    for (std::size_t r = 0; r < labels.rows(); ++r) {
      const double v = labels(r, 0);
      require(v >= 0.0 && v == std::floor(v), ErrorKind::kFormat,
              labels_path.string() + ": row " + std::to_string(r) + " is not a class id");
      ds.labels.push_back(static_cast<std::size_t>(v));
    }
    attributes = read_lplf(attributes_path);
  }
  ds.attributes = AttributeTable::normalized(std::move(attributes));
  SplitLists split = read_split(split_path);
  ds.seen_classes = std::move(split.seen);
  ds.unseen_classes = std::move(split.unseen);
  ds.train_idx = std::move(split.train);
  ds.test_seen_idx = std::move(split.test_seen);
  ds.test_unseen_idx = std::move(split.test_unseen);
  ds.validate();
  return ds;
}

SplitDataset load_dataset(const fs::path& dir, DataFormat format) {
  const DatasetFiles files = dataset_files(dir, format);
  return load_dataset(files.features, files.attributes, files.split, format);
}

SplitDataset load_dataset(const fs::path& dir) {
  const bool binary = fs::exists(dir / "features.lplf");
  return load_dataset(dir, binary ? DataFormat::kBinary : DataFormat::kCsv);
}

void save_dataset(const SplitDataset& ds, const fs::path& dir, DataFormat format) {
  ds.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorKind::kIo, "cannot create directory " + dir.string());
  const DatasetFiles files = dataset_files(dir, format);
  if (format == DataFormat::kCsv) {
    std::vector<std::string> leads;
    for (std::size_t i = 0; i < ds.num_samples(); ++i)
      leads.push_back(std::to_string(i) + "," + std::to_string(ds.labels[i]));
    write_file_bytes(files.features, render_csv(ds.features, "id,label", "f", leads));
    leads.clear();
    for (std::size_t k = 0; k < ds.num_classes(); ++k) leads.push_back(std::to_string(k));
    write_file_bytes(files.attributes, render_csv(ds.attributes.values, "class_id", "a", leads));
  } else {
    write_lplf(files.features, ds.features);
    Matrix labels(ds.num_samples(), 1);
    for (std::size_t i = 0; i < ds.num_samples(); ++i) labels(i, 0) = static_cast<double>(ds.labels[i]);
    write_lplf(files.labels, labels);
    write_lplf(files.attributes, ds.attributes.values);
  }
  write_file_bytes(files.split, render_split(ds));
}

std::string dataset_fingerprint(const fs::path& dir) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char* name : {"features.csv", "attributes.csv", "features.lplf",
                           "features.labels.lplf", "attributes.lplf", "split.txt"}) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) continue;
    h = fnv1a64(name, h);
    h = fnv1a64(read_file_bytes(p), h);
  }
  return hex64(h);
}

void SynthConfig::validate() const {
  require(seen_count >= 1 && unseen_count >= 1 && attr_dim >= 1 && feat_dim >= 1 &&
              train_per_class >= 1 && test_per_class >= 1,
          ErrorKind::kParameter, "synthetic benchmark counts must all be at least 1");
  require(noise_scale >= 0.0 && std::isfinite(noise_scale), ErrorKind::kParameter,
          "noise_scale must be non-negative");
}

std::vector<std::string> SynthConfig::warnings() const {
  std::vector<std::string> w;
  if (feat_dim < attr_dim) {
    w.push_back("feat_dim " + std::to_string(feat_dim) + " is smaller than attr_dim " +
                std::to_string(attr_dim) + "; class means cannot span the attribute space");
  }
  return w;
}

SyntheticBenchmark generate_synthetic_benchmark(const SynthConfig& cfg) {
  cfg.validate();
  const RngStream root(cfg.seed);
  RngStream attr_rng = root.derive("attributes");
  RngStream map_rng = root.derive("map");
  RngStream noise_rng = root.derive("noise");

  const std::size_t L = cfg.seen_count + cfg.unseen_count;
  const std::size_t D = cfg.attr_dim;
  const std::size_t C = cfg.feat_dim;

  Matrix attrs(L, D);
  for (std::size_t k = 0; k < L; ++k) {
    auto row = attrs.row(k);
    double norm = 0.0;
    do {
      for (double& x : row) x = attr_rng.normal();
      norm = l2_norm(row);
    } while (norm == 0.0);
    for (double& x : row) x /= norm;
  }
  attrs = quantize_to_float(attrs);

  Matrix g(C, D);
  const double scale = 1.0 / std::sqrt(static_cast<double>(D));
  for (double& x : g.data()) x = map_rng.normal() * scale;

  const Matrix means = matmul_nt(attrs, g);  // L x C

  SyntheticBenchmark out;
  SplitDataset& ds = out.dataset;
  const std::size_t per_seen = cfg.train_per_class + cfg.test_per_class;
  const std::size_t total = cfg.seen_count * per_seen + cfg.unseen_count * cfg.test_per_class;
  ds.features = Matrix(total, C);
  ds.labels.reserve(total);
  std::size_t row = 0;
  auto emit = [&](std::size_t k, std::vector<std::size_t>& into) {
    auto dst = ds.features.row(row);
    auto mu = means.row(k);
    for (std::size_t c = 0; c < C; ++c) dst[c] = mu[c] + cfg.noise_scale * noise_rng.normal();
    ds.labels.push_back(k);
    into.push_back(row++);
  };
  for (std::size_t k = 0; k < L; ++k) {
    if (k < cfg.seen_count) {
      ds.seen_classes.push_back(k);
      for (std::size_t s = 0; s < cfg.train_per_class; ++s) emit(k, ds.train_idx);
      for (std::size_t s = 0; s < cfg.test_per_class; ++s) emit(k, ds.test_seen_idx);
    } else {
      ds.unseen_classes.push_back(k);
      for (std::size_t s = 0; s < cfg.test_per_class; ++s) emit(k, ds.test_unseen_idx);
    }
  }
  ds.features = quantize_to_float(ds.features);
  ds.attributes = AttributeTable{std::move(attrs)};
  ds.validate();
  out.ground_truth_map = std::move(g);
  return out;
}

SplitDataset generate_synthetic(const SynthConfig& cfg) {
  return generate_synthetic_benchmark(cfg).dataset;
}

TrainingView::TrainingView(const SplitDataset& ds)
    : ds_(ds),
      is_train_(ds.num_samples(), false),
      is_seen_(ds.num_classes(), false),
      per_class_(ds.num_classes()) {
  for (std::size_t k : ds.seen_classes) is_seen_[k] = true;
  for (std::size_t i : ds.train_idx) {
    is_train_[i] = true;
    per_class_[ds.labels[i]].push_back(i);
  }
}

const std::vector<std::size_t>& TrainingView::train_indices_of(std::size_t class_id) const {
  require(class_id < is_seen_.size() && is_seen_[class_id], ErrorKind::kUsage,
          "training view asked for samples of non-seen class " + std::to_string(class_id));
  return per_class_[class_id];
}

std::span<const double> TrainingView::feature(std::size_t sample) const {
  require(sample < is_train_.size() && is_train_[sample], ErrorKind::kUsage,
          "training view asked for non-training sample " + std::to_string(sample));
  ++log_.feature_reads;
  log_.samples.insert(sample);
  return ds_.features.row(sample);
}

std::size_t TrainingView::label(std::size_t sample) const {
  require(sample < is_train_.size() && is_train_[sample], ErrorKind::kUsage,
          "training view asked for the label of non-training sample " + std::to_string(sample));
  return ds_.labels[sample];
}

std::span<const double> TrainingView::attribute(std::size_t class_id) const {
  require(class_id < is_seen_.size() && is_seen_[class_id], ErrorKind::kUsage,
          "training view asked for attributes of non-seen class " + std::to_string(class_id));
  ++log_.attribute_reads;
  log_.classes.insert(class_id);
  return ds_.attributes.row(class_id);
}

Episode sample_episode(const TrainingView& view, std::size_t classes, std::size_t shots,
                       RngStream& rng) {
  require(classes >= 1 && shots >= 1, ErrorKind::kParameter,
          "episode needs at least one class and one sample per class");
  std::vector<std::size_t> eligible;
  for (std::size_t k : view.seen_classes()) {
    if (view.train_indices_of(k).size() >= shots) eligible.push_back(k);
  }
  require(eligible.size() >= classes, ErrorKind::kCapacity,
          "episode wants " + std::to_string(classes) + " classes with >= " +
              std::to_string(shots) + " training samples but only " +
              std::to_string(eligible.size()) + " qualify (short by " +
              std::to_string(classes - eligible.size()) + ")");

  Episode ep;
  ep.visual = Matrix(classes * shots, view.feature_dim());
  ep.semantic = Matrix(classes, view.attribute_dim());
  for (std::size_t pick : rng.sample_without_replacement(eligible.size(), classes)) {
    ep.class_ids.push_back(eligible[pick]);
  }
  for (std::size_t m = 0; m < classes; ++m) {
    const std::size_t k = ep.class_ids[m];
    auto attr = view.attribute(k);
    std::copy(attr.begin(), attr.end(), ep.semantic.row(m).begin());
    const auto& pool = view.train_indices_of(k);
    for (std::size_t pick : rng.sample_without_replacement(pool.size(), shots)) {
      const std::size_t sample = pool[pick];
      auto src = view.feature(sample);
      std::copy(src.begin(), src.end(), ep.visual.row(ep.sample_idx.size()).begin());
      ep.sample_idx.push_back(sample);
      ep.local_labels.push_back(m);
    }
  }
  return ep;
}

Episode sample_episode(const SplitDataset& ds, std::size_t classes, std::size_t shots,
                       RngStream& rng) {
  TrainingView view(ds);
  return sample_episode(view, classes, shots, rng);
}

}  // namespace lpl
