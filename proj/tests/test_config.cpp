// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "qlsc/config.hpp"
#include "qlsc/errors.hpp"

namespace qlsc {
namespace {

TEST(RunConfig, EmptyObjectGivesDefaults) {
  const RunConfig c = run_config_from_json(Json::object());
  EXPECT_EQ(c.gen.n_groups, 150u);
  EXPECT_EQ(c.model.embed_dim, 64u);
  ASSERT_TRUE(c.model.qlsc.has_value());
  EXPECT_EQ(c.model.qlsc->k, 32u);
  EXPECT_EQ(c.train.learning_rate, 1e-3);
  EXPECT_EQ(c.paths.out_dir, "reports");
}

TEST(RunConfig, PartialOverridesMerge) {
  const Json j = Json::parse(R"({"gen": {"n_groups": 20},
                                 "model": {"embed_dim": 16, "qlsc": {"k": 4}},
                                 "train": {"epochs": 2}})");
  const RunConfig c = run_config_from_json(j);
  EXPECT_EQ(c.gen.n_groups, 20u);
  EXPECT_EQ(c.gen.paraphrases_per_group, 3u);
  EXPECT_EQ(c.model.embed_dim, 16u);
  EXPECT_EQ(c.model.qlsc->n, 16u);
  EXPECT_EQ(c.model.qlsc->k, 4u);
  EXPECT_EQ(c.model.qlsc->m, 2u);
  EXPECT_EQ(c.train.epochs, 2u);
  EXPECT_EQ(c.train.batch_size, 4u);
}

TEST(RunConfig, RoundTripsThroughJson) {
  RunConfig c;
  c.gen.seed = 99;
  c.model.qlsc->calibrate_passage = false;
  c.model.null_threshold = 0.5;
  c.train.learning_rate = 2e-3;
  c.paths.data = "corpus.jsonl";
  const RunConfig back = run_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
  RunConfig plain;
  plain.model.qlsc.reset();
  EXPECT_FALSE(run_config_from_json(to_json(plain)).model.qlsc.has_value());
  EXPECT_TRUE(std::isinf(run_config_from_json(to_json(plain)).model.null_threshold));
}

TEST(RunConfig, PresetKeepsSeed) {
  const RunConfig c =
      run_config_from_json(Json::parse(R"({"train": {"seed": 7, "preset": "paper-plm"}})"));
  EXPECT_EQ(c.train.learning_rate, 3e-5);
  EXPECT_EQ(c.train.seed, 7u);
}

TEST(RunConfig, RejectsUnknownKeysAndBadTypes) {
  auto fails = [](const char* text, const char* needle) {
    try {
      run_config_from_json(Json::parse(text));
      ADD_FAILURE() << "accepted " << text;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  fails(R"({"modle": {}})", "modle");
  fails(R"({"gen": {"n_group": 3}})", "gen.n_group");
  fails(R"({"model": {"qlsc": {"kk": 3}}})", "model.qlsc.kk");
  fails(R"({"train": {"epochs": -1}})", "train.epochs");
  fails(R"({"train": {"learning_rate": "fast"}})", "train.learning_rate");
  fails(R"({"model": {"qlsc": {"enabled": 1}}})", "model.qlsc.enabled");
}

}  // namespace
}  // namespace qlsc
