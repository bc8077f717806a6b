// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "qlsc/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "qlsc/config.hpp"
#include "qlsc/errors.hpp"

namespace qlsc {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

TrainConfig TrainConfig::preset(const std::string& name) {
  TrainConfig cfg;
  if (name == "desk") return cfg;
  if (name == "paper-plm") {
    cfg.learning_rate = 3e-5;
    return cfg;
  }
  throw ConfigError("unknown training preset '" + name + "'");
}

void adam_step(std::span<Tensor> params, AdamState& state,
               const TrainConfig& cfg) {
  if (state.m.empty() && state.t == 0) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ContractError("adam_step: state tracks " +
                        std::to_string(state.m.size()) + " tensors but " +
                        std::to_string(params.size()) + " were given");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].mutable_data();
    const auto grad = params[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != values.size() || v.size() != values.size()) {
      throw ContractError("adam_step: state shape mismatch for tensor " +
                          std::to_string(i));
    }
    for (std::size_t j = 0; j < values.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * grad[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

TrainResult train(QAModel& model, std::span<const QAExample> corpus,
                  const TrainConfig& cfg, Rng& rng,
                  const std::function<void(std::size_t, double)>& on_epoch) {
  cfg.validate();
  if (corpus.empty()) throw ContractError("train: empty corpus");
  std::vector<Tensor> params = model.parameters();
  AdamState adam;
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_total = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      ++batch_index;
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const double weight = 1.0 / static_cast<double>(end - begin);
      model.zero_grad();
      double batch_total = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const QAExample& ex = corpus[order[i]];
        const SpanLogits logits = model.forward_logits(ex);
        const Tensor loss =
            span_loss(logits.start, logits.end,
                      static_cast<std::size_t>(ex.answer_start),
                      static_cast<std::size_t>(ex.answer_end));
        const double value = loss.item();
        if (!std::isfinite(value)) {
          throw NumericError(fmt::format(
              "non-finite loss {} at epoch {}, batch {} (example {})", value,
              epoch, batch_index, ex.id));
        }
        backward(scale(loss, weight));
        batch_total += value;
      }
      adam_step(params, adam, cfg);
      epoch_total += batch_total;
    }
    const double mean = epoch_total / static_cast<double>(corpus.size());
    result.epoch_losses.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  result.rng_state = rng.state();
  return result;
}

std::string loss_csv(std::span<const double> epoch_losses) {
  std::string out = "epoch,mean_loss\n";
  for (std::size_t i = 0; i < epoch_losses.size(); ++i) {
    out += fmt::format("{},{:.6f}\n", i + 1, epoch_losses[i]);
  }
  return out;
}

// ---- checkpoints ----------------------------------------------------------

std::string checkpoint_json(const QAModel& model, const TrainConfig& cfg,
                            const Rng::State& rng_state) {
  Json params = Json::object();
  for (const auto& p : model.named_parameters()) {
    params[p.name] = Json{{"shape", p.tensor.shape()},
                          {"data", std::vector<double>(p.tensor.data().begin(),
                                                       p.tensor.data().end())}};
  }
  Json doc{{"format_version", kCheckpointVersion},
           {"model_config", to_json(model.config())},
           {"train_config", to_json(cfg)},
           {"params", std::move(params)},
           {"rng_state", std::vector<std::uint64_t>(rng_state.begin(),
                                                    rng_state.end())}};
  return doc.dump() + "\n";
}

void save_checkpoint(const QAModel& model, const TrainConfig& cfg,
                     const Rng::State& rng_state,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << checkpoint_json(model, cfg, rng_state);
  if (!out) throw Error("failed writing " + path.string());
}

Checkpoint parse_checkpoint(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("checkpoint: expected a JSON object");
  for (const char* key :
       {"format_version", "model_config", "train_config", "params", "rng_state"}) {
    if (!doc.contains(key)) {
      throw SchemaError(std::string("checkpoint: missing field '") + key + "'");
    }
  }
  if (!doc["format_version"].is_number_integer() ||
      doc["format_version"].get<int>() != kCheckpointVersion) {
    throw VersionError("checkpoint: format_version " +
                       doc["format_version"].dump() + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }

  ModelConfig model_cfg;
  TrainConfig train_cfg;
  try {
    model_cfg = model_config_from_json(doc["model_config"]);
    train_cfg = train_config_from_json(doc["train_config"]);
  } catch (const ConfigError& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
  Rng rng(0);
  Checkpoint ckpt{QAModel::init(model_cfg, rng), train_cfg, {}};

  const Json& stored = doc["params"];
  if (!stored.is_object()) throw SchemaError("checkpoint: 'params' must be an object");
  std::set<std::string> expected;
  for (auto& p : ckpt.model.named_parameters()) {
    expected.insert(p.name);
    auto it = stored.find(p.name);
    if (it == stored.end()) {
      throw SchemaError("checkpoint: missing parameter '" + p.name + "'");
    }
    Shape shape;
    std::vector<double> data;
    try {
      shape = it->at("shape").get<Shape>();
      data = it->at("data").get<std::vector<double>>();
    } catch (const Json::exception& e) {
      throw SchemaError("checkpoint: parameter '" + p.name + "': " + e.what());
    }
    if (shape != p.tensor.shape() || data.size() != p.tensor.numel()) {
      throw SchemaError("checkpoint: parameter '" + p.name + "' has shape " +
                        shape_str(shape) + ", model expects " +
                        shape_str(p.tensor.shape()));
    }
    std::copy(data.begin(), data.end(), p.tensor.mutable_data().begin());
  }
  std::vector<std::string> unexpected;
  for (const auto& item : stored.items()) {
    if (!expected.count(item.key())) unexpected.push_back(item.key());
  }
  if (!unexpected.empty()) {
    std::string names;
    for (const auto& n : unexpected) names += (names.empty() ? "" : ", ") + n;
    throw SchemaError("checkpoint: unexpected parameters: " + names);
  }

  const Json& rng_json = doc["rng_state"];
  if (!rng_json.is_array() || rng_json.size() != 4) {
    throw SchemaError("checkpoint: 'rng_state' must hold 4 integers");
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (!rng_json[i].is_number_unsigned()) {
      throw SchemaError("checkpoint: 'rng_state' must hold 4 integers");
    }
    ckpt.rng_state[i] = rng_json[i].get<std::uint64_t>();
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_checkpoint(buffer.str());
}

}  // namespace qlsc
