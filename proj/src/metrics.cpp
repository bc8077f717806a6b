// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "qlsc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "qlsc/errors.hpp"

namespace qlsc {

double token_f1(std::span<const int> predicted, std::span<const int> gold) {
  if (predicted.empty() || gold.empty()) {
    return predicted.empty() && gold.empty() ? 1.0 : 0.0;
  }
  std::map<int, int> counts;
  for (int t : gold) ++counts[t];
  std::size_t common = 0;
  for (int t : predicted) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision =
      static_cast<double>(common) / static_cast<double>(predicted.size());
  const double recall = static_cast<double>(common) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

EmF1 score_em_f1(std::span<const AnswerPair> pairs) {
  EmF1 out;
  if (pairs.empty()) return out;
  double em = 0.0, f1 = 0.0;
  for (const auto& p : pairs) {
    em += p.predicted == p.gold ? 1.0 : 0.0;
    f1 += token_f1(p.predicted, p.gold);
  }
  const auto n = static_cast<double>(pairs.size());
  out.em = 100.0 * em / n;
  out.f1 = 100.0 * f1 / n;
  return out;
}

EmF1 evaluate_em_f1(const QAModel& model, std::span<const QAExample> examples) {
  std::vector<AnswerPair> pairs;
  pairs.reserve(examples.size());
  for (const auto& ex : examples) {
    auto gold = ex.answer_tokens();
    pairs.push_back({predict_answer(model, ex).tokens, {gold.begin(), gold.end()}});
  }
  return score_em_f1(pairs);
}

TcrTir compute_tcr_tir(std::span<const GroupedPrediction> predictions) {
  if (predictions.empty()) throw ContractError("compute_tcr_tir: no predictions");
  std::map<std::string, std::vector<const std::vector<int>*>> groups;
  std::size_t empty = 0;
  for (const auto& p : predictions) {
    groups[p.group_id].push_back(&p.tokens);
    if (p.tokens.empty()) ++empty;
  }
  std::size_t eligible = 0, consistent = 0;
  for (const auto& [id, members] : groups) {
    if (members.size() < 2) continue;
    ++eligible;
    const bool same = std::all_of(members.begin(), members.end(),
                                  [&](const auto* t) { return *t == *members.front(); });
    if (same) ++consistent;
  }
  TcrTir out;
  out.tcr = eligible == 0 ? 0.0
                          : 100.0 * static_cast<double>(consistent) /
                                static_cast<double>(eligible);
  out.tir = 100.0 * static_cast<double>(empty) /
            static_cast<double>(predictions.size());
  return out;
}

Distances mean_pairwise_distances(std::span<const GroupedVector> vectors) {
  std::map<std::string, std::vector<const std::vector<double>*>> groups;
  for (const auto& v : vectors) groups[v.group_id].push_back(&v.values);
  Distances out;
  double l1_sum = 0.0, l2_sum = 0.0;
  for (const auto& [id, members] : groups) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        const auto& a = *members[i];
        const auto& b = *members[j];
        if (a.size() != b.size()) {
          throw DimensionError("paraphrase distances: vectors of group " + id +
                               " differ in length");
        }
        double l1 = 0.0, sq = 0.0;
        for (std::size_t d = 0; d < a.size(); ++d) {
          const double diff = a[d] - b[d];
          l1 += std::abs(diff);
          sq += diff * diff;
        }
        l1_sum += l1;
        l2_sum += std::sqrt(sq);
        ++out.pairs;
      }
    }
  }
  if (out.pairs > 0) {
    out.mean_l1 = l1_sum / static_cast<double>(out.pairs);
    out.mean_l2 = l2_sum / static_cast<double>(out.pairs);
  }
  return out;
}

Distances paraphrase_distances(const QAModel& model,
                               std::span<const QAExample> examples,
                               QueryStage stage) {
  std::vector<GroupedVector> vectors;
  vectors.reserve(examples.size());
  for (const auto& ex : examples) {
    vectors.push_back({ex.group_id, model.query_representation(ex, stage)});
  }
  return mean_pairwise_distances(vectors);
}

// ---- PCA ------------------------------------------------------------------

namespace {

using Matrix = std::vector<std::vector<double>>;

constexpr double kPowerTolerance = 1e-10;
constexpr int kPowerMaxIterations = 10000;

std::vector<double> mat_vec(const Matrix& m, const std::vector<double>& v) {
  std::vector<double> out(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    out[i] = std::inner_product(m[i].begin(), m[i].end(), v.begin(), 0.0);
  }
  return out;
}

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// Dominant eigenpair of a symmetric PSD matrix; zero vector if m vanishes.
std::pair<std::vector<double>, double> dominant(const Matrix& m) {
  const std::size_t dim = m.size();
  std::size_t pivot = 0;
  for (std::size_t i = 1; i < dim; ++i) {
    if (m[i][i] > m[pivot][pivot]) pivot = i;
  }
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = m[i][pivot];
  double len = norm(v);
  if (len == 0.0) {
    std::fill(v.begin(), v.end(), 1.0);
    v = mat_vec(m, v);
    len = norm(v);
    if (len == 0.0) return {std::vector<double>(dim, 0.0), 0.0};
  }
  for (auto& x : v) x /= len;

  for (int it = 0; it < kPowerMaxIterations; ++it) {
    std::vector<double> w = mat_vec(m, v);
    const double w_len = norm(w);
    if (w_len == 0.0) return {std::vector<double>(dim, 0.0), 0.0};
    for (auto& x : w) x /= w_len;
    if (std::inner_product(w.begin(), w.end(), v.begin(), 0.0) < 0.0) {
      for (auto& x : w) x = -x;
    }
    double diff = 0.0;
    for (std::size_t i = 0; i < dim; ++i) diff += (w[i] - v[i]) * (w[i] - v[i]);
    v = std::move(w);
    if (std::sqrt(diff) < kPowerTolerance) break;
  }
  const auto mv = mat_vec(m, v);
  const double lambda = std::inner_product(v.begin(), v.end(), mv.begin(), 0.0);
  return {v, std::max(0.0, lambda)};
}

void orient(std::vector<double>& v) {
  for (double x : v) {
    if (std::abs(x) > 1e-12) {
      if (x < 0.0) {
        for (auto& y : v) y = -y;
      }
      return;
    }
  }
}

}  // namespace

PcaResult pca_project_2d(std::span<const std::vector<double>> vectors) {
  if (vectors.size() < 2) throw ContractError("pca_project_2d: need >= 2 vectors");
  const std::size_t dim = vectors.front().size();
  if (dim < 2) throw ContractError("pca_project_2d: need dimension >= 2");
  for (const auto& v : vectors) {
    if (v.size() != dim) throw DimensionError("pca_project_2d: ragged input");
  }
  const auto count = static_cast<double>(vectors.size());
  std::vector<double> mean(dim, 0.0);
  for (const auto& v : vectors) {
    for (std::size_t d = 0; d < dim; ++d) mean[d] += v[d];
  }
  for (auto& x : mean) x /= count;
  Matrix centered;
  for (const auto& v : vectors) {
    std::vector<double> c(dim);
    for (std::size_t d = 0; d < dim; ++d) c[d] = v[d] - mean[d];
    centered.push_back(std::move(c));
  }
  Matrix cov(dim, std::vector<double>(dim, 0.0));
  for (const auto& c : centered) {
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) cov[i][j] += c[i] * c[j];
    }
  }
  PcaResult result;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) cov[i][j] /= count;
    result.total_variance += cov[i][i];
  }

  for (int axis = 0; axis < 2; ++axis) {
    auto [dir, lambda] = dominant(cov);
    if (lambda == 0.0) std::fill(dir.begin(), dir.end(), 0.0);
    orient(dir);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) cov[i][j] -= lambda * dir[i] * dir[j];
    }
    result.explained_variance[static_cast<std::size_t>(axis)] = lambda;
    result.directions[static_cast<std::size_t>(axis)] = std::move(dir);
  }
  for (const auto& c : centered) {
    std::array<double, 2> p{};
    for (std::size_t a = 0; a < 2; ++a) {
      p[a] = std::inner_product(c.begin(), c.end(), result.directions[a].begin(), 0.0);
    }
    result.points.push_back(p);
  }
  return result;
}

// ---- reports --------------------------------------------------------------

MetricsReport evaluate_model(const QAModel& model,
                             std::span<const QAExample> examples,
                             QueryStage stage) {
  MetricsReport report;
  report.n_examples = examples.size();
  if (examples.empty()) return report;
  std::vector<AnswerPair> pairs;
  std::vector<GroupedPrediction> grouped;
  for (const auto& ex : examples) {
    auto pred = predict_answer(model, ex);
    auto gold = ex.answer_tokens();
    grouped.push_back({ex.group_id, pred.tokens});
    pairs.push_back({std::move(pred.tokens), {gold.begin(), gold.end()}});
  }
  const EmF1 quality = score_em_f1(pairs);
  const TcrTir robustness = compute_tcr_tir(grouped);
  const Distances dist = paraphrase_distances(model, examples, stage);
  std::map<std::string, int> groups;
  for (const auto& ex : examples) ++groups[ex.group_id];
  report.em = quality.em;
  report.f1 = quality.f1;
  report.tcr = robustness.tcr;
  report.tir = robustness.tir;
  report.mean_l1 = dist.mean_l1;
  report.mean_l2 = dist.mean_l2;
  report.n_groups = groups.size();
  return report;
}

std::string metrics_csv(const MetricsReport& r) {
  std::string out = "metric,value\n";
  out += fmt::format("em,{:.6f}\n", r.em);
  out += fmt::format("f1,{:.6f}\n", r.f1);
  out += fmt::format("tcr,{:.6f}\n", r.tcr);
  out += fmt::format("tir,{:.6f}\n", r.tir);
  out += fmt::format("mean_l1,{:.6f}\n", r.mean_l1);
  out += fmt::format("mean_l2,{:.6f}\n", r.mean_l2);
  out += fmt::format("n_examples,{}\n", r.n_examples);
  out += fmt::format("n_groups,{}\n", r.n_groups);
  return out;
}

}  // namespace qlsc
