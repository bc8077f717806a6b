// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "qlsc/errors.hpp"
#include "qlsc/qa_model.hpp"

namespace qlsc {
namespace {

using oracle::random_tensor;

ModelConfig micro_config(bool with_qlsc) {
  ModelConfig cfg;
  cfg.vocab_size = 20;
  cfg.embed_dim = 8;
  cfg.max_query_len = 6;
  cfg.max_passage_len = 10;
  cfg.max_answer_len = 4;
  cfg.qlsc = with_qlsc ? std::optional<QLSCConfig>(QLSCConfig{8, 2, 3, true, true}) : std::nullopt;
  return cfg;
}

QAExample micro_example() {
  QAExample ex;
  ex.id = "x";
  ex.group_id = "g";
  ex.question = {4, 9, 3, 17};
  ex.passage = {5, 6, 7, 8, 12, 3};
  ex.answer_start = 2;
  ex.answer_end = 3;
  return ex;
}

TEST(ModelConfig, Validation) {
  EXPECT_NO_THROW(micro_config(true).validate());
  ModelConfig bad = micro_config(true);
  bad.encoder = "gru";
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = micro_config(true);
  bad.qlsc->n = 7;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = micro_config(false);
  bad.max_answer_len = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(QAModel, ParameterOrderAndNames) {
  Rng rng(1);
  const QAModel model = QAModel::init(micro_config(true), rng);
  std::vector<std::string> names;
  for (const auto& p : model.named_parameters()) names.push_back(p.name);
  ASSERT_GE(names.size(), 8u);
  EXPECT_EQ(names.front(), "embedding.table");
  EXPECT_EQ(names[1], "query_encoder.w_x");
  EXPECT_EQ(names[4], "qlsc.info");
  EXPECT_EQ(names.back(), "end_head.weight");
  Rng rng2(1);
  const QAModel plain = QAModel::init(micro_config(false), rng2);
  for (const auto& p : plain.named_parameters()) {
    EXPECT_EQ(p.name.find("qlsc"), std::string::npos);
    EXPECT_EQ(p.name.find("query_encoder"), std::string::npos);
  }
}

TEST(QAModel, LogitShapesAndLengthLimits) {
  Rng rng(2);
  const QAModel model = QAModel::init(micro_config(true), rng);
  QAExample ex = micro_example();
  const SpanLogits logits = model.forward_logits(ex);
  EXPECT_EQ(logits.start.shape(), (Shape{6}));
  EXPECT_EQ(logits.end.shape(), (Shape{6}));
  ex.question.assign(7, 4);
  try {
    model.forward_logits(ex);
    FAIL() << "expected ContractError";
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("max_query_len"), std::string::npos);
  }
  ex = micro_example();
  ex.passage.assign(11, 4);
  EXPECT_THROW(model.forward_logits(ex), ContractError);
  ex = micro_example();
  ex.passage[0] = 20;
  EXPECT_THROW(model.forward_logits(ex), VocabError);
}

TEST(QAModel, ForwardIsBitwiseDeterministic) {
  Rng rng(3);
  const QAModel model = QAModel::init(micro_config(true), rng);
  const auto a = model.forward_logits(micro_example());
  const auto b = model.forward_logits(micro_example());
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(a.start.data()[i], b.start.data()[i]);
    EXPECT_EQ(a.end.data()[i], b.end.data()[i]);
  }
}

TEST(QAModel, ZeroEffectCalibratorMatchesPlainReader) {
  Rng rng_a(4), rng_b(5);
  const QAModel plain = QAModel::init(micro_config(false), rng_a);
  ModelConfig cfg = micro_config(true);
  cfg.qlsc->enhance_from_passage = false;
  QAModel calibrated = QAModel::init(cfg, rng_b);
  std::map<std::string, Tensor> shared;
  for (const auto& p : plain.named_parameters()) shared[p.name] = p.tensor;
  for (auto& p : calibrated.named_parameters()) {
    if (auto it = shared.find(p.name); it != shared.end()) {
      std::copy(it->second.data().begin(), it->second.data().end(),
                p.tensor.mutable_data().begin());
    }
  }
  // A zero scaling network maps H and C to zero, so every residual and
  // every center vanishes.
  auto w = calibrated.qlsc_params().scale.mutable_data();
  std::fill(w.begin(), w.end(), 0.0);
  const auto a = plain.forward_logits(micro_example());
  const auto b = calibrated.forward_logits(micro_example());
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(a.start.data()[i], b.start.data()[i]);
    EXPECT_EQ(a.end.data()[i], b.end.data()[i]);
  }
}

TEST(QAModel, InformationMatrixReceivesGradient) {
  Rng rng(6);
  QAModel model = QAModel::init(micro_config(true), rng);
  const QAExample ex = micro_example();
  const auto logits = model.forward_logits(ex);
  backward(span_loss(logits.start, logits.end, 2, 3));
  double norm = 0;
  for (double g : model.qlsc_params().info.grad()) norm += g * g;
  EXPECT_GT(norm, 0.0);
}

TEST(QAModel, FullModelFiniteDifferences) {
  for (std::uint64_t seed : {7u, 8u}) {
    Rng rng(seed);
    ModelConfig cfg = micro_config(true);
    cfg.max_query_len = 4;
    cfg.max_passage_len = 6;
    QAModel model = QAModel::init(cfg, rng);
    for (auto& p : model.named_parameters()) {
      for (auto& v : p.tensor.mutable_data()) v = rng.uniform(-1.0, 1.0);
    }
    const QAExample ex = micro_example();
    const auto named = model.named_parameters();
    const GradCheckReport report = finite_diff_report(
        [&] {
          const auto logits = model.forward_logits(ex);
          return span_loss(logits.start, logits.end, 2, 3);
        },
        named);
    EXPECT_LE(report.max_relative_error, 1e-3) << "seed " << seed;
  }
}

TEST(SpanLoss, Oracles) {
  EXPECT_NEAR(span_loss(Tensor::zeros({5}), Tensor::zeros({5}), 1, 3).item(), 2 * std::log(5.0),
              1e-14);
  std::vector<double> s(6, 0.0), e(6, 0.0);
  s[2] = 40;
  e[4] = 40;
  EXPECT_LT(span_loss(Tensor::from({6}, s), Tensor::from({6}, e), 2, 4).item(), 1e-10);
  Rng rng(9);
  const Tensor a = random_tensor({7}, rng, -3, 3, true), b = random_tensor({7}, rng, -3, 3, true);
  auto ce = [](const Tensor& x, std::size_t g) {
    double total = 0;
    for (double v : x.data()) total += std::exp(v);
    return std::log(total) - x.data()[g];
  };
  const Tensor loss = span_loss(a, b, 5, 6);
  EXPECT_NEAR(loss.item(), ce(a, 5) + ce(b, 6), 1e-12);
  EXPECT_GE(loss.item(), 0.0);
  backward(loss);
  double sa = 0, sb = 0;
  for (double g : a.grad()) sa += g;
  for (double g : b.grad()) sb += g;
  EXPECT_NEAR(sa, 0.0, 1e-14);
  EXPECT_NEAR(sb, 0.0, 1e-14);
  EXPECT_THROW(span_loss(a, b, 7, 0), ContractError);
}

TEST(DecodeSpan, UnimodalAndTieBreak) {
  std::vector<double> s(7, 0.0), e(7, 0.0);
  s[2] = 3;
  e[4] = 3;
  const SpanPrediction p = decode_span(s, e, 8);
  EXPECT_FALSE(p.is_empty);
  EXPECT_EQ(p.start, 2);
  EXPECT_EQ(p.end, 4);
  EXPECT_EQ(p.score, 6.0);
  const std::vector<double> flat(5, 1.0);
  const SpanPrediction t = decode_span(flat, flat, 3);
  EXPECT_EQ(t.start, 0);
  EXPECT_EQ(t.end, 0);
  EXPECT_TRUE(decode_span({}, {}, 3).is_empty);
  EXPECT_THROW(decode_span(flat, std::vector<double>(4, 0.0), 3), DimensionError);
}

TEST(DecodeSpan, MatchesExhaustiveEnumeration) {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 10, cap = 3;
    std::vector<double> s(len), e(len);
    // Coarse values make ties common so the tie-break rule is exercised.
    for (auto& v : s) v = static_cast<double>(rng.bounded(4));
    for (auto& v : e) v = static_cast<double>(rng.bounded(4));
    int bs = -1, be = -1;
    double best = -INFINITY;
    for (std::size_t i = 0; i < len; ++i)
      for (std::size_t j = i; j < len && j < i + cap; ++j)
        if (s[i] + e[j] > best) {
          best = s[i] + e[j];
          bs = static_cast<int>(i);
          be = static_cast<int>(j);
        }
    const SpanPrediction p = decode_span(s, e, cap);
    EXPECT_EQ(p.start, bs);
    EXPECT_EQ(p.end, be);
    EXPECT_EQ(p.score, best);
    EXPECT_LE(p.end - p.start + 1, static_cast<int>(cap));
  }
}

TEST(DecodeSpan, NullThresholdEmitsEmpty) {
  const std::vector<double> s{0.1, 0.2}, e{0.3, 0.0};
  EXPECT_TRUE(decode_span(s, e, 2, 5.0).is_empty);
  EXPECT_FALSE(decode_span(s, e, 2, 0.0).is_empty);
}

TEST(PredictAnswer, SlicesPassageAndHandlesEmptyPassage) {
  Rng rng(11);
  const QAModel model = QAModel::init(micro_config(true), rng);
  QAExample ex = micro_example();
  const AnswerPrediction pred = predict_answer(model, ex);
  ASSERT_FALSE(pred.span.is_empty);
  const std::vector<int> want(ex.passage.begin() + pred.span.start,
                              ex.passage.begin() + pred.span.end + 1);
  EXPECT_EQ(pred.tokens, want);
  ex.passage.clear();
  const AnswerPrediction none = predict_answer(model, ex);
  EXPECT_TRUE(none.span.is_empty);
  EXPECT_TRUE(none.tokens.empty());
}

TEST(QueryRepresentation, RawIsTokenMeanOfEmbeddings) {
  Rng rng(12);
  const QAModel model = QAModel::init(micro_config(true), rng);
  const QAExample ex = micro_example();
  const auto raw = model.query_representation(ex, QueryStage::kRaw);
  const Tensor& table = model.named_parameters().front().tensor;
  ASSERT_EQ(raw.size(), 8u);
  for (std::size_t d = 0; d < 8; ++d) {
    double want = 0;
    for (int id : ex.question) want += table.at({static_cast<std::size_t>(id), d});
    EXPECT_NEAR(raw[d], want / 4.0, 1e-15);
  }
  const auto cal = model.query_representation(ex, QueryStage::kCalibrated);
  EXPECT_NE(raw, cal);
}

}  // namespace
}  // namespace qlsc
