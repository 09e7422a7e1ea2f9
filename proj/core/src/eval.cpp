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

#include "lpl/eval.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "lpl/error.hpp"

namespace lpl {

namespace {

void check_prototypes(const Matrix& prototypes, std::span<const std::size_t> class_ids,
                      const Matrix& features) {
  require(prototypes.rows() >= 1, ErrorKind::kParameter, "no prototypes to predict with");
  require(prototypes.rows() == class_ids.size(), ErrorKind::kShape,
          "one class id per prototype row required");
  require(prototypes.cols() == features.cols(), ErrorKind::kShape,
          "prototypes have " + std::to_string(prototypes.cols()) + " columns, features " +
              std::to_string(features.cols()));
}

// Strictly better score, or equal score with a smaller id.
bool beats(double score, std::size_t id, double best_score, std::size_t best_id) {
  return score > best_score || (score == best_score && id < best_id);
}

std::vector<double> row_norms(const Matrix& m) {
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = l2_norm(m.row(r));
  return out;
}

double cos_with_norms(std::span<const double> a, double na, std::span<const double> b, double nb) {
  const double denom = na * nb;
  return denom > 0.0 ? dot(a, b) / denom : 0.0;
}

}  // namespace

std::vector<std::size_t> zsl_predict(const Matrix& prototypes, std::span<const std::size_t> class_ids,
                                     const Matrix& features) {
  check_prototypes(prototypes, class_ids, features);
  const auto pn = row_norms(prototypes);
  std::vector<std::size_t> out(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto x = features.row(r);
    const double xn = l2_norm(x);
    double best = 0.0;
    std::size_t best_id = 0;
    for (std::size_t p = 0; p < prototypes.rows(); ++p) {
      const double s = cos_with_norms(prototypes.row(p), pn[p], x, xn);
      if (p == 0 || beats(s, class_ids[p], best, best_id)) {
        best = s;
        best_id = class_ids[p];
      }
    }
    out[r] = best_id;
  }
  return out;
}

StackedScores stack_scores(const Matrix& prototypes, std::span<const std::size_t> class_ids,
                           const std::vector<bool>& seen_mask, const Matrix& features) {
  check_prototypes(prototypes, class_ids, features);
  require(seen_mask.size() == class_ids.size(), ErrorKind::kValidation,
          "seen mask has " + std::to_string(seen_mask.size()) + " entries for " +
              std::to_string(class_ids.size()) + " prototypes");
  StackedScores out;
  for (bool s : seen_mask) (s ? out.has_seen : out.has_unseen) = true;
  const auto pn = row_norms(prototypes);
  out.rows.resize(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto x = features.row(r);
    const double xn = l2_norm(x);
    bool any_seen = false, any_unseen = false;
    StackedScores::Row row{0.0, 0, 0.0, 0};
    for (std::size_t p = 0; p < prototypes.rows(); ++p) {
      const double s = cos_with_norms(prototypes.row(p), pn[p], x, xn);
      if (seen_mask[p]) {
        if (!any_seen || beats(s, class_ids[p], row.seen_score, row.seen_id)) {
          row.seen_score = s;
          row.seen_id = class_ids[p];
          any_seen = true;
        }
      } else if (!any_unseen || beats(s, class_ids[p], row.unseen_score, row.unseen_id)) {
        row.unseen_score = s;
        row.unseen_id = class_ids[p];
        any_unseen = true;
      }
    }
    out.rows[r] = row;
  }
  return out;
}

std::vector<std::size_t> StackedScores::predict(double delta) const {
  std::vector<std::size_t> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Row& row = rows[r];
    if (!has_unseen) {
      out[r] = row.seen_id;
    } else if (!has_seen) {
      out[r] = row.unseen_id;
    } else {
      const double calibrated = row.seen_score - delta;
      out[r] = beats(calibrated, row.seen_id, row.unseen_score, row.unseen_id) ? row.seen_id
                                                                                : row.unseen_id;
    }
  }
  return out;
}

std::vector<std::size_t> gzsl_predict(const Matrix& prototypes,
                                      std::span<const std::size_t> class_ids,
                                      const std::vector<bool>& seen_mask, const Matrix& features,
                                      double delta) {
  return stack_scores(prototypes, class_ids, seen_mask, features).predict(delta);
}

ClassAccuracy per_class_accuracy(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> labels,
                                 std::span<const std::size_t> class_set) {
  require(predictions.size() == labels.size(), ErrorKind::kShape,
          "predictions and labels differ in length");
  const std::set<std::size_t> allowed(class_set.begin(), class_set.end());
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> counts;  // correct, total
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(allowed.count(labels[i]) == 1, ErrorKind::kValidation,
            "label " + std::to_string(labels[i]) + " is outside the evaluated class set");
    auto& c = counts[labels[i]];
    c.first += predictions[i] == labels[i] ? 1 : 0;
    ++c.second;
  }
  ClassAccuracy out;
  for (const auto& [k, c] : counts) {
    const double acc = static_cast<double>(c.first) / static_cast<double>(c.second);
    out.per_class[k] = acc;
    out.mean += acc;
  }
  if (!counts.empty()) out.mean /= static_cast<double>(counts.size());
  return out;
}

double harmonic_mean(double unseen, double seen) {
  const double sum = unseen + seen;
  return sum == 0.0 ? 0.0 : 2.0 * unseen * seen / sum;
}

namespace {

struct EvalContext {
  std::vector<std::size_t> all_ids;
  std::vector<bool> seen_mask;
  Matrix all_prototypes;
  Matrix unseen_prototypes;
  Matrix unseen_features;
  Matrix seen_features;
  std::vector<std::size_t> unseen_labels;
  std::vector<std::size_t> seen_labels;
};

std::vector<std::size_t> labels_at(const SplitDataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(ds.labels[i]);
  return out;
}

EvalContext make_context(const PrototypeModel& model, const SplitDataset& ds) {
  require(model.net.input_dim() == ds.attribute_dim() && model.net.output_dim() == ds.feature_dim(),
          ErrorKind::kShape,
          "model maps " + std::to_string(model.net.input_dim()) + " -> " +
              std::to_string(model.net.output_dim()) + " but the dataset has attributes of dim " +
              std::to_string(ds.attribute_dim()) + " and features of dim " +
              std::to_string(ds.feature_dim()));
  EvalContext ctx;
  ctx.all_ids = ds.seen_classes;
  ctx.all_ids.insert(ctx.all_ids.end(), ds.unseen_classes.begin(), ds.unseen_classes.end());
  ctx.seen_mask.assign(ds.seen_classes.size(), true);
  ctx.seen_mask.resize(ctx.all_ids.size(), false);
  ctx.all_prototypes = project_prototypes(model, ds.attributes, ctx.all_ids);
  if (!ds.unseen_classes.empty())
    ctx.unseen_prototypes = project_prototypes(model, ds.attributes, ds.unseen_classes);
  ctx.unseen_features = gather_rows(ds.features, ds.test_unseen_idx);
  ctx.seen_features = gather_rows(ds.features, ds.test_seen_idx);
  ctx.unseen_labels = labels_at(ds, ds.test_unseen_idx);
  ctx.seen_labels = labels_at(ds, ds.test_seen_idx);
  return ctx;
}

void finish_report(EvalReport& r) {
  if (r.U && r.S) r.H = harmonic_mean(*r.U, *r.S);
}

}  // namespace

EvalReport evaluate(const PrototypeModel& model, const SplitDataset& ds, double delta) {
  std::vector<double> grid{delta};
  return cs_sweep(model, ds, grid).reports.front();
}

std::vector<double> default_delta_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(static_cast<double>(i) / 50.0);
  return grid;
}

SweepResult cs_sweep(const PrototypeModel& model, const SplitDataset& ds,
                     std::span<const double> deltas) {
  require(!deltas.empty(), ErrorKind::kParameter, "calibration grid is empty");
  const EvalContext ctx = make_context(model, ds);

  EvalReport base;
  if (!ctx.unseen_labels.empty() && !ds.unseen_classes.empty()) {
    const auto preds = zsl_predict(ctx.unseen_prototypes, ds.unseen_classes, ctx.unseen_features);
    const ClassAccuracy acc = per_class_accuracy(preds, ctx.unseen_labels, ds.unseen_classes);
    base.T = acc.mean;
    base.per_class = acc.per_class;
  }
  const StackedScores unseen_scores =
      stack_scores(ctx.all_prototypes, ctx.all_ids, ctx.seen_mask, ctx.unseen_features);
  const StackedScores seen_scores =
      stack_scores(ctx.all_prototypes, ctx.all_ids, ctx.seen_mask, ctx.seen_features);

  SweepResult out;
  for (double delta : deltas) {
    EvalReport r = base;
    r.delta = delta;
    if (!ctx.unseen_labels.empty()) {
      const ClassAccuracy acc =
          per_class_accuracy(unseen_scores.predict(delta), ctx.unseen_labels, ds.unseen_classes);
      r.U = acc.mean;
      r.per_class_gzsl.insert(acc.per_class.begin(), acc.per_class.end());
    }
    if (!ctx.seen_labels.empty()) {
      const ClassAccuracy acc =
          per_class_accuracy(seen_scores.predict(delta), ctx.seen_labels, ds.seen_classes);
      r.S = acc.mean;
      r.per_class_gzsl.insert(acc.per_class.begin(), acc.per_class.end());
    }
    finish_report(r);
    out.reports.push_back(std::move(r));
  }
  for (std::size_t i = 1; i < out.reports.size(); ++i) {
    const double h = out.reports[i].H.value_or(-1.0);
    const double best = out.reports[out.best_index].H.value_or(-1.0);
    if (h > best || (h == best && out.reports[i].delta < out.reports[out.best_index].delta))
      out.best_index = i;
  }
  return out;
}

SimilarityMatrix prototype_similarity(const Matrix& prototypes,
                                      std::span<const std::size_t> class_ids) {
  require(prototypes.rows() >= 1, ErrorKind::kParameter, "no prototypes");
  require(prototypes.rows() == class_ids.size(), ErrorKind::kShape,
          "one class id per prototype row required");
  const std::size_t k = prototypes.rows();
  SimilarityMatrix sim{{class_ids.begin(), class_ids.end()}, Matrix(k, k), std::vector<bool>(k)};
  const auto norms = row_norms(prototypes);
  for (std::size_t i = 0; i < k; ++i) {
    sim.degenerate[i] = norms[i] == 0.0;
    sim.values(i, i) = sim.degenerate[i] ? 0.0 : 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      const double c = cosine(prototypes.row(i), prototypes.row(j)).value;
      sim.values(i, j) = c;
      sim.values(j, i) = c;
    }
  }
  return sim;
}

double mean_off_diagonal(const SimilarityMatrix& sim) {
  const std::size_t k = sim.values.rows();
  if (k < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j) total += sim.values(i, j);
  return total / static_cast<double>(k * (k - 1));
}

namespace {

std::string fmt_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_real(*v) : ""; }

}  // namespace

std::string report_csv(const EvalReport& r) {
  return "delta,T,U,S,H\n" + fmt_real(r.delta) + "," + fmt_opt(r.T) + "," + fmt_opt(r.U) + "," +
         fmt_opt(r.S) + "," + fmt_opt(r.H) + "\n";
}

std::string per_class_csv(const EvalReport& r) {
  std::string out = "class_id,zsl_accuracy,gzsl_accuracy\n";
  std::set<std::size_t> ids;
  for (const auto& [k, _] : r.per_class) ids.insert(k);
  for (const auto& [k, _] : r.per_class_gzsl) ids.insert(k);
  for (std::size_t k : ids) {
    auto z = r.per_class.find(k);
    auto g = r.per_class_gzsl.find(k);
    out += std::to_string(k) + "," + (z != r.per_class.end() ? fmt_real(z->second) : "") + "," +
           (g != r.per_class_gzsl.end() ? fmt_real(g->second) : "") + "\n";
  }
  return out;
}

std::string sweep_csv(const SweepResult& sweep) {
  std::string out = "delta,U,S,H\n";
  for (const auto& r : sweep.reports)
    out += fmt_real(r.delta) + "," + fmt_opt(r.U) + "," + fmt_opt(r.S) + "," + fmt_opt(r.H) + "\n";
  return out;
}

std::string similarity_csv(const SimilarityMatrix& sim) {
  std::string out = "class_id";
  for (std::size_t id : sim.class_ids) out += "," + std::to_string(id);
  out += "\n";
  for (std::size_t i = 0; i < sim.class_ids.size(); ++i) {
    out += std::to_string(sim.class_ids[i]);
    for (double v : sim.values.row(i)) out += "," + fmt_real(v);
    out += "\n";
  }
  return out;
}

}  // namespace lpl
