// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "qlsc/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>

#include "qlsc/errors.hpp"

namespace qlsc {
namespace {

void check_keys(const Json& j, const char* section,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    throw ConfigError(std::string("config section '") + section +
                      "' must be an object");
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) {
      throw ConfigError(std::string("unknown config key '") + section + "." +
                        item.key() + "'");
    }
  }
}

template <typename T>
void read(const Json& j, const char* section, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_unsigned()) throw ConfigError("expected a non-negative integer");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError("expected true or false");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError("expected a number");
    }
    out = it->template get<T>();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config key '") + section + "." + key +
                      "': " + e.what());
  }
}

}  // namespace

Json to_json(const GenSpec& s) {
  return Json{{"seed", s.seed},
              {"n_groups", s.n_groups},
              {"paraphrases_per_group", s.paraphrases_per_group},
              {"vocab_size", s.vocab_size},
              {"passage_len_min", s.passage_len_min},
              {"passage_len_max", s.passage_len_max},
              {"n_entities", s.n_entities},
              {"n_relations", s.n_relations},
              {"relation_synonyms", s.relation_synonyms},
              {"distractor_facts", s.distractor_facts},
              {"test_fraction", s.test_fraction},
              {"dev_fraction", s.dev_fraction}};
}

GenSpec gen_spec_from_json(const Json& j, GenSpec s) {
  check_keys(j, "gen",
             {"seed", "n_groups", "paraphrases_per_group", "vocab_size",
              "passage_len_min", "passage_len_max", "n_entities", "n_relations",
              "relation_synonyms", "distractor_facts", "test_fraction",
              "dev_fraction"});
  read(j, "gen", "seed", s.seed);
  read(j, "gen", "n_groups", s.n_groups);
  read(j, "gen", "paraphrases_per_group", s.paraphrases_per_group);
  read(j, "gen", "vocab_size", s.vocab_size);
  read(j, "gen", "passage_len_min", s.passage_len_min);
  read(j, "gen", "passage_len_max", s.passage_len_max);
  read(j, "gen", "n_entities", s.n_entities);
  read(j, "gen", "n_relations", s.n_relations);
  read(j, "gen", "relation_synonyms", s.relation_synonyms);
  read(j, "gen", "distractor_facts", s.distractor_facts);
  read(j, "gen", "test_fraction", s.test_fraction);
  read(j, "gen", "dev_fraction", s.dev_fraction);
  return s;
}

Json to_json(const QLSCConfig& c) {
  return Json{{"m", c.m},
              {"k", c.k},
              {"calibrate_passage", c.calibrate_passage},
              {"enhance_from_passage", c.enhance_from_passage}};
}

QLSCConfig qlsc_config_from_json(const Json& j, QLSCConfig c) {
  check_keys(j, "model.qlsc",
             {"enabled", "m", "k", "calibrate_passage", "enhance_from_passage"});
  read(j, "model.qlsc", "m", c.m);
  read(j, "model.qlsc", "k", c.k);
  read(j, "model.qlsc", "calibrate_passage", c.calibrate_passage);
  read(j, "model.qlsc", "enhance_from_passage", c.enhance_from_passage);
  return c;
}

Json to_json(const ModelConfig& c) {
  Json qlsc = c.qlsc ? to_json(*c.qlsc) : to_json(QLSCConfig{});
  qlsc["enabled"] = c.qlsc.has_value();
  Json j{{"vocab_size", c.vocab_size},
         {"embed_dim", c.embed_dim},
         {"max_query_len", c.max_query_len},
         {"max_passage_len", c.max_passage_len},
         {"max_answer_len", c.max_answer_len},
         {"encoder", c.encoder},
         {"qlsc", qlsc}};
  if (std::isfinite(c.null_threshold)) {
    j["null_threshold"] = c.null_threshold;
  } else {
    j["null_threshold"] = nullptr;
  }
  return j;
}

ModelConfig model_config_from_json(const Json& j, ModelConfig c) {
  check_keys(j, "model",
             {"vocab_size", "embed_dim", "max_query_len", "max_passage_len",
              "max_answer_len", "null_threshold", "encoder", "qlsc"});
  read(j, "model", "vocab_size", c.vocab_size);
  read(j, "model", "embed_dim", c.embed_dim);
  read(j, "model", "max_query_len", c.max_query_len);
  read(j, "model", "max_passage_len", c.max_passage_len);
  read(j, "model", "max_answer_len", c.max_answer_len);
  read(j, "model", "encoder", c.encoder);
  if (auto it = j.find("null_threshold"); it != j.end()) {
    if (it->is_null()) {
      c.null_threshold = -std::numeric_limits<double>::infinity();
    } else {
      read(j, "model", "null_threshold", c.null_threshold);
    }
  }
  QLSCConfig q = c.qlsc.value_or(QLSCConfig{});
  bool enabled = c.qlsc.has_value();
  if (auto it = j.find("qlsc"); it != j.end()) {
    q = qlsc_config_from_json(*it, q);
    read(*it, "model.qlsc", "enabled", enabled);
  }
  q.n = c.embed_dim;
  c.qlsc = enabled ? std::optional<QLSCConfig>(q) : std::nullopt;
  return c;
}

Json to_json(const TrainConfig& c) {
  return Json{{"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"seed", c.seed},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"epsilon", c.epsilon}};
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  check_keys(j, "train",
             {"preset", "learning_rate", "batch_size", "epochs", "seed", "beta1",
              "beta2", "epsilon"});
  if (auto it = j.find("preset"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("config key 'train.preset' must be a string");
    const auto seed = c.seed;
    c = TrainConfig::preset(it->get<std::string>());
    c.seed = seed;
  }
  read(j, "train", "learning_rate", c.learning_rate);
  read(j, "train", "batch_size", c.batch_size);
  read(j, "train", "epochs", c.epochs);
  read(j, "train", "seed", c.seed);
  read(j, "train", "beta1", c.beta1);
  read(j, "train", "beta2", c.beta2);
  read(j, "train", "epsilon", c.epsilon);
  return c;
}

Json to_json(const RunConfig& c) {
  return Json{{"gen", to_json(c.gen)},
              {"model", to_json(c.model)},
              {"train", to_json(c.train)},
              {"paths",
               {{"data", c.paths.data},
                {"checkpoint", c.paths.checkpoint},
                {"out_dir", c.paths.out_dir}}}};
}

RunConfig run_config_from_json(const Json& j, RunConfig c) {
  check_keys(j, "(root)", {"gen", "model", "train", "paths"});
  if (auto it = j.find("gen"); it != j.end()) c.gen = gen_spec_from_json(*it, c.gen);
  if (auto it = j.find("model"); it != j.end()) {
    c.model = model_config_from_json(*it, c.model);
  }
  if (auto it = j.find("train"); it != j.end()) {
    c.train = train_config_from_json(*it, c.train);
  }
  if (auto it = j.find("paths"); it != j.end()) {
    check_keys(*it, "paths", {"data", "checkpoint", "out_dir"});
    read(*it, "paths", "data", c.paths.data);
    read(*it, "paths", "checkpoint", c.paths.checkpoint);
    read(*it, "paths", "out_dir", c.paths.out_dir);
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace qlsc
