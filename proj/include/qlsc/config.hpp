// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON views of the configuration structs. Readers start from the defaults
// and overwrite only the keys present; unknown keys are rejected so typos
// surface as errors instead of silently falling back to defaults.

#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "qlsc/data.hpp"
#include "qlsc/qa_model.hpp"
#include "qlsc/train.hpp"

namespace qlsc {

using Json = nlohmann::ordered_json;

Json to_json(const GenSpec& spec);
Json to_json(const QLSCConfig& config);
Json to_json(const ModelConfig& config);
Json to_json(const TrainConfig& config);

GenSpec gen_spec_from_json(const Json& j, GenSpec base = {});
QLSCConfig qlsc_config_from_json(const Json& j, QLSCConfig base = {});
ModelConfig model_config_from_json(const Json& j, ModelConfig base = {});
TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});

struct RunPaths {
  std::string data = "data.jsonl";
  std::string checkpoint = "checkpoint.json";
  std::string out_dir = "reports";
};

/// Everything a run needs. The model's embedding width and the calibrator
/// width are kept equal: "model.embed_dim" drives both.
struct RunConfig {
  GenSpec gen;
  ModelConfig model;
  TrainConfig train;
  RunPaths paths;
};

Json to_json(const RunConfig& config);
RunConfig run_config_from_json(const Json& j, RunConfig base = {});
/// Defaults merged with the file's contents; ConfigError on bad content.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace qlsc
