// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Answer quality and paraphrase robustness metrics.
//
//   EM / F1  exact match and token-multiset F1 against the gold answer.
//   TCR      share of paraphrase groups (two or more members) whose predicted
//            token sequences are all identical.
//   TIR      share of predictions that are empty.
//   L1 / L2  mean pairwise distance between query representations of
//            paraphrases in the same group.

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qlsc/data.hpp"
#include "qlsc/qa_model.hpp"

namespace qlsc {

struct EmF1 {
  double em = 0.0;  // percent
  double f1 = 0.0;  // percent
};

struct AnswerPair {
  std::vector<int> predicted;
  std::vector<int> gold;
};

/// Per-example F1 in [0, 1]; both empty scores 1.
double token_f1(std::span<const int> predicted, std::span<const int> gold);
EmF1 score_em_f1(std::span<const AnswerPair> pairs);
EmF1 evaluate_em_f1(const QAModel& model, std::span<const QAExample> examples);

struct GroupedPrediction {
  std::string group_id;
  std::vector<int> tokens;  // empty: no answer
};

struct TcrTir {
  double tcr = 0.0;  // percent
  double tir = 0.0;  // percent
};

/// ContractError on empty input. TCR is 0 when no group has two members.
TcrTir compute_tcr_tir(std::span<const GroupedPrediction> predictions);

struct GroupedVector {
  std::string group_id;
  std::vector<double> values;
};

struct Distances {
  double mean_l1 = 0.0;
  double mean_l2 = 0.0;
  std::size_t pairs = 0;
};

/// Sums L1 and L2 over every unordered pair within a group and divides each
/// by the number of pairs. Groups with one member contribute nothing.
Distances mean_pairwise_distances(std::span<const GroupedVector> vectors);
Distances paraphrase_distances(const QAModel& model,
                               std::span<const QAExample> examples,
                               QueryStage stage);

struct PcaResult {
  std::vector<std::array<double, 2>> points;
  std::array<double, 2> explained_variance{};
  std::array<std::vector<double>, 2> directions;
  double total_variance = 0.0;
};

/// Centers the vectors and projects onto the top two principal directions of
/// the (1/N) covariance, found by power iteration with deflation. Each
/// direction's first non-negligible coordinate is positive.
PcaResult pca_project_2d(std::span<const std::vector<double>> vectors);

struct MetricsReport {
  double em = 0.0;
  double f1 = 0.0;
  double tcr = 0.0;
  double tir = 0.0;
  double mean_l1 = 0.0;
  double mean_l2 = 0.0;
  std::size_t n_examples = 0;
  std::size_t n_groups = 0;
};

MetricsReport evaluate_model(const QAModel& model,
                             std::span<const QAExample> examples,
                             QueryStage stage);

/// "metric,value" rows in the order em, f1, tcr, tir, mean_l1, mean_l2,
/// n_examples, n_groups.
std::string metrics_csv(const MetricsReport& report);

}  // namespace qlsc
