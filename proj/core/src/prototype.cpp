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

#include "lpl/prototype.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "lpl/error.hpp"
#include "lpl/matrix_io.hpp"

namespace lpl {

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kS2vBaseline: return "s2v";
    case TrainMode::kEpOnly: return "ep";
    case TrainMode::kEpEi: return "ep-ei";
    case TrainMode::kFull: return "full";
  }
  return "unknown";
}

TrainMode parse_train_mode(std::string_view name) {
  if (name == "s2v" || name == "s2v_baseline") return TrainMode::kS2vBaseline;
  if (name == "ep" || name == "ep_only") return TrainMode::kEpOnly;
  if (name == "ep-ei" || name == "ep_ei") return TrainMode::kEpEi;
  if (name == "full") return TrainMode::kFull;
  fail(ErrorKind::kParameter, "unknown training mode '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  require(classes_per_episode >= 1 && shots >= 1, ErrorKind::kParameter,
          "episode classes and shots must be positive");
  require(tau > 0.0 && std::isfinite(tau), ErrorKind::kParameter, "tau must be positive");
  require(lambda_real >= 0.0 && std::isfinite(lambda_real), ErrorKind::kParameter,
          "lambda_real must be non-negative");
  optimizer.validate();
  if (uses_placeholders()) {
    hallucination.validate();
    require(hallucination.n + 1 <= classes_per_episode, ErrorKind::kParameter,
            "neighbor count n=" + std::to_string(hallucination.n) +
                " needs at least n+1 classes per episode");
  }
}

std::size_t TrainConfig::resolved_episodes(std::size_t train_count) const {
  if (episodes_per_epoch > 0) return episodes_per_epoch;
  const std::size_t batch = classes_per_episode * shots;
  return std::max<std::size_t>(1, (train_count + batch - 1) / batch);
}

std::size_t TrainConfig::resolved_hidden(std::size_t attr_dim, std::size_t feat_dim) const {
  return hidden_dim > 0 ? hidden_dim : 2 * std::max(attr_dim, feat_dim);
}

bool TrainConfig::uses_placeholders() const noexcept {
  return mode != TrainMode::kS2vBaseline && hallucination.n > 0;
}

PrototypeModel init_prototype_model(std::size_t attr_dim, std::size_t feat_dim,
                                    const TrainConfig& cfg) {
  RngStream rng = RngStream(cfg.seed).derive("init");
  return PrototypeModel{
      MappingNet::random(attr_dim, cfg.resolved_hidden(attr_dim, feat_dim), feat_dim,
                         cfg.activation, rng),
      cfg,
      {}};
}

LossAndGrads prototype_loss(const MappingNet& net, const Matrix& semantic, const Matrix& visual,
                            std::span<const std::size_t> labels, double tau) {
  const std::size_t k = semantic.rows();
  require(k >= 1, ErrorKind::kShape, "classification loss needs at least one class");
  require(labels.size() == visual.rows(), ErrorKind::kShape,
          "one label per visual row is required");
  require(visual.cols() == net.output_dim(), ErrorKind::kShape,
          "visual rows have " + std::to_string(visual.cols()) + " columns, mapping outputs " +
              std::to_string(net.output_dim()));
  for (std::size_t y : labels)
    require(y < k, ErrorKind::kShape, "local label " + std::to_string(y) + " out of range");

  auto fwd = net.forward(semantic);
  const Matrix& protos = fwd.output;
  const std::size_t C = protos.cols();
  std::vector<double> proto_norm(k);
  for (std::size_t l = 0; l < k; ++l) proto_norm[l] = l2_norm(protos.row(l));

  Matrix grad_protos(k, C);
  std::vector<double> cosines(k), logits(k);
  const double inv_rows = 1.0 / static_cast<double>(visual.rows());
  double total = 0.0;
  for (std::size_t s = 0; s < visual.rows(); ++s) {
    auto v = visual.row(s);
    const double v_norm = l2_norm(v);
    for (std::size_t l = 0; l < k; ++l) {
      const double denom = proto_norm[l] * v_norm;
      cosines[l] = denom > 0.0 ? dot(protos.row(l), v) / denom : 0.0;
      logits[l] = tau * cosines[l];
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double x : logits) z += std::exp(x - peak);
    const double log_z = peak + std::log(z);
    total += log_z - logits[labels[s]];

    for (std::size_t l = 0; l < k; ++l) {
      const double denom = proto_norm[l] * v_norm;
      if (denom == 0.0) continue;
      const double prob = std::exp(logits[l] - log_z);
      const double g_logit = (prob - (l == labels[s] ? 1.0 : 0.0)) * inv_rows * tau;
      if (g_logit == 0.0) continue;
      auto p = protos.row(l);
      auto gp = grad_protos.row(l);
      const double pn2 = proto_norm[l] * proto_norm[l];
      for (std::size_t c = 0; c < C; ++c)
        gp[c] += g_logit * (v[c] / denom - cosines[l] * p[c] / pn2);
    }
  }
  LossAndGrads out;
  out.loss = total * inv_rows;
  out.grads = net.backward(fwd.cache, grad_protos);
  return out;
}

LossAndGrads place_loss(const MappingNet& net, const HallucinatedEpisode& hep, double tau) {
  return prototype_loss(net, hep.semantic, hep.visual, hep.local_labels, tau);
}

LossAndGrads real_loss(const MappingNet& net, const Episode& ep, double tau) {
  return prototype_loss(net, ep.semantic, ep.visual, ep.local_labels, tau);
}

namespace {

void accumulate(MappingNet::Gradients& into, const MappingNet::Gradients& from, double scale) {
  auto dst = std::array<Matrix*, 5>{&into.w1, &into.b1, &into.w2, &into.b2, &into.input};
  auto src = std::array<const Matrix*, 5>{&from.w1, &from.b1, &from.w2, &from.b2, &from.input};
  for (std::size_t p = 0; p < dst.size(); ++p) {
    if (dst[p]->size() != src[p]->size()) continue;  // input grads of different batches
    for (std::size_t i = 0; i < dst[p]->size(); ++i) dst[p]->data()[i] += scale * src[p]->data()[i];
  }
}

}  // namespace

PrototypeModel train_prototypes(const TrainingView& view, const TrainConfig& cfg) {
  cfg.validate();
  require(cfg.mode != TrainMode::kFull || view.refined(), ErrorKind::kUsage,
          "mode 'full' needs features refined by semantic-oriented fine-tuning");
  PrototypeModel model = init_prototype_model(view.attribute_dim(), view.feature_dim(), cfg);
  const RngStream root(cfg.seed);
  RngStream episode_rng = root.derive("episodes");
  RngStream hallu_rng = root.derive("hallucination");
  Optimizer optimizer(cfg.optimizer);

  HalluConfig hallu = cfg.hallucination;
  if (cfg.mode == TrainMode::kEpOnly) hallu.forced_beta = 0.0;
  const bool placeholders = cfg.uses_placeholders();
  const double real_weight = placeholders ? cfg.lambda_real : 1.0;
  const std::size_t episodes = cfg.resolved_episodes(view.train_indices().size());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t e = 0; e < episodes; ++e) {
      const Episode ep = sample_episode(view, cfg.classes_per_episode, cfg.shots, episode_rng);
      double loss = 0.0;
      MappingNet::Gradients grads;
      bool have_grads = false;
      try {
        if (real_weight > 0.0) {
          LossAndGrads real = real_loss(model.net, ep, cfg.tau);
          loss += real_weight * real.loss;
          grads = std::move(real.grads);
          if (real_weight != 1.0) {
            for (Matrix* m : {&grads.w1, &grads.b1, &grads.w2, &grads.b2})
              for (double& x : m->data()) x *= real_weight;
          }
          have_grads = true;
        }
        if (placeholders) {
          const HallucinatedEpisode hep = hallucinate(ep, hallu, hallu_rng);
          LossAndGrads place = place_loss(model.net, hep, cfg.tau);
          loss += place.loss;
          if (have_grads) {
            accumulate(grads, place.grads, 1.0);
          } else {
            grads = std::move(place.grads);
            have_grads = true;
          }
        }
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::kNumeric) throw;
        fail(ErrorKind::kTraining, "mapping network diverged in epoch " + std::to_string(epoch + 1));
      }
      if (!std::isfinite(loss)) {
        fail(ErrorKind::kTraining, "prototype loss became non-finite in epoch " +
                                       std::to_string(epoch + 1));
      }
      epoch_loss += loss;
      if (have_grads) {
        auto params = model.net.parameters();
        const auto grad_ptrs = grads.parameters();
        optimizer.step(params, grad_ptrs);
      }
    }
    if (!model.net.all_finite()) {
      fail(ErrorKind::kTraining, "mapping parameters diverged in epoch " + std::to_string(epoch + 1));
    }
    model.loss_trace.push_back(epoch_loss / static_cast<double>(episodes));
  }
  return model;
}

PrototypeModel train_prototypes(const SplitDataset& ds, const TrainConfig& cfg) {
  TrainingView view(ds);
  return train_prototypes(view, cfg);
}

Matrix project_prototypes(const PrototypeModel& model, const AttributeTable& attributes,
                          std::span<const std::size_t> class_ids) {
  for (std::size_t id : class_ids) {
    require(id < attributes.num_classes(), ErrorKind::kValidation,
            "unknown class id " + std::to_string(id));
  }
  return model.net.apply(gather_rows(attributes.values, class_ids));
}

namespace {

constexpr const char* kParamFiles[] = {"h_w1.lplf", "h_b1.lplf", "h_w2.lplf", "h_b2.lplf"};

}  // namespace

void save_prototype_model(const PrototypeModel& model, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorKind::kIo, "cannot create " + dir.string());
  const auto params = model.net.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) write_lplf(dir / kParamFiles[p], *params[p]);

  const TrainConfig& c = model.config;
  nlohmann::ordered_json j;
  j["mode"] = to_string(c.mode);
  j["input_dim"] = model.net.input_dim();
  j["hidden_dim"] = model.net.hidden_dim();
  j["output_dim"] = model.net.output_dim();
  j["activation"] = model.net.activation() == Activation::kRelu ? "relu" : "identity";
  j["seed"] = c.seed;
  j["epochs"] = c.epochs;
  j["episodes_per_epoch"] = c.episodes_per_epoch;
  j["M"] = c.classes_per_episode;
  j["N"] = c.shots;
  j["optimizer"] = to_string(c.optimizer.kind);
  j["learning_rate"] = c.optimizer.learning_rate;
  j["tau"] = c.tau;
  j["lambda_real"] = c.lambda_real;
  j["sigma"] = c.hallucination.sigma;
  j["n"] = c.hallucination.n;
  j["alpha1"] = c.hallucination.alpha1;
  j["alpha2"] = c.hallucination.alpha2;
  j["loss_trace"] = model.loss_trace;
  write_file_bytes(dir / "model.json", j.dump(2) + "\n");
}

PrototypeModel load_prototype_model(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "model.json";
  require(std::filesystem::exists(manifest_path), ErrorKind::kIo,
          "missing model manifest " + manifest_path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file_bytes(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, manifest_path.string() + ": " + e.what());
  }
  try {
    TrainConfig c;
    c.mode = parse_train_mode(j.at("mode").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.episodes_per_epoch = j.at("episodes_per_epoch").get<std::size_t>();
    c.classes_per_episode = j.at("M").get<std::size_t>();
    c.shots = j.at("N").get<std::size_t>();
    c.optimizer.kind = parse_optimizer_kind(j.at("optimizer").get<std::string>());
    c.optimizer.learning_rate = j.at("learning_rate").get<double>();
    c.tau = j.at("tau").get<double>();
    c.lambda_real = j.at("lambda_real").get<double>();
    c.hallucination.sigma = j.at("sigma").get<double>();
    c.hallucination.n = j.at("n").get<std::size_t>();
    c.hallucination.alpha1 = j.at("alpha1").get<double>();
    c.hallucination.alpha2 = j.at("alpha2").get<double>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.activation = j.at("activation").get<std::string>() == "relu" ? Activation::kRelu
                                                                    : Activation::kIdentity;
    MappingNet net(j.at("input_dim").get<std::size_t>(), c.hidden_dim,
                   j.at("output_dim").get<std::size_t>(), c.activation);
    net.set_parameters(read_lplf(dir / kParamFiles[0]), read_lplf(dir / kParamFiles[1]),
                       read_lplf(dir / kParamFiles[2]), read_lplf(dir / kParamFiles[3]));
    return PrototypeModel{std::move(net), c, j.at("loss_trace").get<std::vector<double>>()};
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, manifest_path.string() + ": " + e.what());
  }
}

}  // namespace lpl
