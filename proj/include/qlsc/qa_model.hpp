// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// A small extractive reader. Query and passage tokens are embedded; when
// calibration is enabled an LSTM encodes the query into H, the calibrator
// produces centers from H and rewrites the query (and optionally passage)
// embedding rows. A joint LSTM then reads [query ; SEP ; passage] and two
// bias-free linear heads score every passage position as answer start and end.

#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qlsc/data.hpp"
#include "qlsc/nn.hpp"
#include "qlsc/qlsc.hpp"
#include "qlsc/rng.hpp"
#include "qlsc/tensor.hpp"

namespace qlsc {

struct ModelConfig {
  std::size_t vocab_size = 400;
  std::size_t embed_dim = 64;
  std::optional<QLSCConfig> qlsc = QLSCConfig{};  // nullopt: plain reader
  std::size_t max_query_len = 16;
  std::size_t max_passage_len = 48;
  std::size_t max_answer_len = 8;
  // Predictions scoring below this are reported empty; -inf disables it.
  double null_threshold = -std::numeric_limits<double>::infinity();
  std::string encoder = "lstm";

  void validate() const;
};

struct SpanLogits {
  Tensor start;  // l_p
  Tensor end;    // l_p
};

struct SpanPrediction {
  int start = 0;
  int end = 0;  // inclusive
  double score = 0.0;
  bool is_empty = true;
};

struct AnswerPrediction {
  SpanPrediction span;
  std::vector<int> tokens;
};

enum class QueryStage { kRaw, kCalibrated };

class QAModel {
 public:
  static QAModel init(const ModelConfig& config, Rng& rng);

  const ModelConfig& config() const { return config_; }
  bool has_qlsc() const { return qlsc_.has_value(); }
  const QLSCParams& qlsc_params() const { return *qlsc_; }
  QLSCParams& qlsc_params() { return *qlsc_; }

  /// Every learnable tensor with a stable, unique name, in a fixed order.
  std::vector<NamedTensor> named_parameters() const;
  std::vector<Tensor> parameters() const;
  void zero_grad();

  SpanLogits forward_logits(const QAExample& ex) const;

  /// Mean over query tokens of the raw embedding rows or of the calibrated
  /// rows (identical when calibration is disabled). Length embed_dim.
  std::vector<double> query_representation(const QAExample& ex,
                                           QueryStage stage) const;

 private:
  struct Encoded {
    Tensor query;    // l_q x n
    Tensor passage;  // l_p x n
  };
  Encoded embed_and_calibrate(const QAExample& ex) const;
  void check_lengths(const QAExample& ex) const;

  ModelConfig config_;
  nn::EmbeddingTable embedding_;
  std::optional<nn::LSTMEncoder> query_encoder_;
  std::optional<QLSCParams> qlsc_;
  nn::LSTMEncoder context_encoder_;
  nn::LinearLayer start_head_;
  nn::LinearLayer end_head_;
};

SpanLogits forward_logits(const QAModel& model, const QAExample& ex);

/// Start plus end cross-entropy.
Tensor span_loss(const Tensor& start_logits, const Tensor& end_logits,
                 std::size_t gold_start, std::size_t gold_end);

/// Best start[s] + end[e] over s <= e < s + max_answer_len; ties go to the
/// smallest s, then the smallest e. Empty when there are no positions or the
/// best score is below null_threshold.
SpanPrediction decode_span(
    std::span<const double> start_logits, std::span<const double> end_logits,
    std::size_t max_answer_len,
    double null_threshold = -std::numeric_limits<double>::infinity());

AnswerPrediction predict_answer(const QAModel& model, const QAExample& ex);

}  // namespace qlsc
