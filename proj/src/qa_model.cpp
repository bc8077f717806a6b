// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "qlsc/qa_model.hpp"

#include <algorithm>
#include <array>

namespace qlsc {

void ModelConfig::validate() const {
  if (vocab_size <= Vocab::kReserved) {
    throw ConfigError("vocab_size must exceed the reserved tokens");
  }
  if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
  if (max_query_len == 0 || max_passage_len == 0) {
    throw ConfigError("maximum lengths must be positive");
  }
  if (max_answer_len == 0) throw ConfigError("max_answer_len must be >= 1");
  if (encoder != "lstm") {
    throw ConfigError("unsupported encoder '" + encoder + "' (only lstm)");
  }
  if (qlsc) {
    qlsc->validate();
    if (qlsc->n != embed_dim) {
      throw ConfigError("QLSC width " + std::to_string(qlsc->n) +
                        " differs from embed_dim " + std::to_string(embed_dim));
    }
  }
}

QAModel QAModel::init(const ModelConfig& config, Rng& rng) {
  config.validate();
  QAModel model;
  model.config_ = config;
  const std::size_t n = config.embed_dim;
  model.embedding_ = nn::EmbeddingTable::init(config.vocab_size, n, rng);
  if (config.qlsc) {
    model.query_encoder_ = nn::LSTMEncoder::init(n, n, rng);
    model.qlsc_ = QLSCParams::init(*config.qlsc, rng);
  }
  model.context_encoder_ = nn::LSTMEncoder::init(n, n, rng);
  // No head bias: one shift of every position's logit cancels in the
  // position softmax, so such a bias would get an identically zero gradient.
  model.start_head_ = nn::LinearLayer::init(n, 1, rng, false);
  model.end_head_ = nn::LinearLayer::init(n, 1, rng, false);
  return model;
}

std::vector<NamedTensor> QAModel::named_parameters() const {
  std::vector<NamedTensor> out;
  nn::append_parameters("embedding", embedding_, out);
  if (query_encoder_) nn::append_parameters("query_encoder", *query_encoder_, out);
  if (qlsc_) qlsc_->append_parameters("qlsc", out);
  nn::append_parameters("context_encoder", context_encoder_, out);
  nn::append_parameters("start_head", start_head_, out);
  nn::append_parameters("end_head", end_head_, out);
  return out;
}

std::vector<Tensor> QAModel::parameters() const {
  std::vector<Tensor> out;
  for (auto& p : named_parameters()) out.push_back(p.tensor);
  return out;
}

void QAModel::zero_grad() {
  for (auto& p : named_parameters()) p.tensor.zero_grad();
}

void QAModel::check_lengths(const QAExample& ex) const {
  if (ex.question.empty()) throw ContractError("example " + ex.id + ": empty question");
  if (ex.question.size() > config_.max_query_len) {
    throw ContractError("example " + ex.id + ": question length " +
                        std::to_string(ex.question.size()) +
                        " exceeds max_query_len " +
                        std::to_string(config_.max_query_len));
  }
  if (ex.passage.size() > config_.max_passage_len) {
    throw ContractError("example " + ex.id + ": passage length " +
                        std::to_string(ex.passage.size()) +
                        " exceeds max_passage_len " +
                        std::to_string(config_.max_passage_len));
  }
}

QAModel::Encoded QAModel::embed_and_calibrate(const QAExample& ex) const {
  check_lengths(ex);
  const Tensor query_cols = nn::embed(embedding_, ex.question);  // n x l_q
  Encoded enc{transpose(query_cols),
              transpose(nn::embed(embedding_, ex.passage))};
  if (qlsc_) {
    const Tensor h = nn::lstm_encode(*query_encoder_, query_cols);
    auto out = qlsc_forward(*config_.qlsc, *qlsc_, h, enc.query, enc.passage);
    enc.query = std::move(out.query);
    enc.passage = std::move(out.passage);
  }
  return enc;
}

SpanLogits QAModel::forward_logits(const QAExample& ex) const {
  const Encoded enc = embed_and_calibrate(ex);
  const std::array<int, 1> sep_id{Vocab::kSep};
  const Tensor sep = transpose(nn::embed(embedding_, sep_id));  // 1 x n
  const std::array<Tensor, 3> parts{enc.query, sep, enc.passage};
  const Tensor joint = nn::lstm_encode(context_encoder_, transpose(concat(parts, 0)));
  const std::size_t offset = ex.question.size() + 1;
  const std::size_t passage_len = ex.passage.size();
  const Tensor passage_states =
      slice(joint, 1, offset, offset + passage_len);  // n x l_p
  return {reshape(nn::linear_apply(start_head_, passage_states), {passage_len}),
          reshape(nn::linear_apply(end_head_, passage_states), {passage_len})};
}

std::vector<double> QAModel::query_representation(const QAExample& ex,
                                                  QueryStage stage) const {
  Tensor rows;
  if (stage == QueryStage::kCalibrated) {
    rows = embed_and_calibrate(ex).query;
  } else {
    check_lengths(ex);
    rows = transpose(nn::embed(embedding_, ex.question));
  }
  const Tensor mean =
      scale(sum_axis(rows, 0), 1.0 / static_cast<double>(rows.dim(0)));
  return {mean.data().begin(), mean.data().end()};
}

SpanLogits forward_logits(const QAModel& model, const QAExample& ex) {
  return model.forward_logits(ex);
}

Tensor span_loss(const Tensor& start_logits, const Tensor& end_logits,
                 std::size_t gold_start, std::size_t gold_end) {
  return add(nn::cross_entropy(start_logits, gold_start),
             nn::cross_entropy(end_logits, gold_end));
}

SpanPrediction decode_span(std::span<const double> start_logits,
                           std::span<const double> end_logits,
                           std::size_t max_answer_len, double null_threshold) {
  if (start_logits.size() != end_logits.size()) {
    throw DimensionError("decode_span: start and end logits differ in length");
  }
  SpanPrediction best;
  const std::size_t len = start_logits.size();
  if (len == 0 || max_answer_len == 0) return best;
  best.is_empty = false;
  best.score = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < len; ++s) {
    const std::size_t last = std::min(len, s + max_answer_len);
    for (std::size_t e = s; e < last; ++e) {
      const double score = start_logits[s] + end_logits[e];
      if (score > best.score) {
        best.score = score;
        best.start = static_cast<int>(s);
        best.end = static_cast<int>(e);
      }
    }
  }
  if (best.score < null_threshold) {
    best.is_empty = true;
    best.start = best.end = 0;
  }
  return best;
}

AnswerPrediction predict_answer(const QAModel& model, const QAExample& ex) {
  AnswerPrediction pred;
  if (ex.passage.empty()) return pred;
  const SpanLogits logits = model.forward_logits(ex);
  pred.span = decode_span(logits.start.data(), logits.end.data(),
                          model.config().max_answer_len,
                          model.config().null_threshold);
  if (!pred.span.is_empty) {
    pred.tokens.assign(ex.passage.begin() + pred.span.start,
                       ex.passage.begin() + pred.span.end + 1);
  }
  return pred;
}

}  // namespace qlsc
