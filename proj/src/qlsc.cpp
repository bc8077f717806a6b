// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "qlsc/qlsc.hpp"

#include <cmath>

#include "qlsc/nn.hpp"

namespace qlsc {

void QLSCConfig::validate() const {
  if (n == 0 || m == 0 || k == 0) {
    throw ConfigError("QLSC config needs n, m and K >= 1 (got n=" +
                      std::to_string(n) + ", m=" + std::to_string(m) +
                      ", K=" + std::to_string(k) + ")");
  }
}

QLSCParams QLSCParams::init(const QLSCConfig& config, Rng& rng) {
  config.validate();
  const std::size_t n = config.n, m = config.m, k = config.k;
  QLSCParams p;
  std::vector<double> info(n * k);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : info) v = rng.normal(0.0, stddev);
  p.info = Tensor::from({n, k}, std::move(info), true);
  p.scale = Tensor::from({m * n, n}, nn::fan_in_uniform(m * n * n, n, rng), true);
  for (std::size_t g = 0; g < m; ++g) {
    p.assign_weight.push_back(
        Tensor::from({k, n}, nn::fan_in_uniform(k * n, n, rng), true));
    p.assign_bias.push_back(Tensor::zeros({k}, true));
    p.gate_weight.push_back(
        Tensor::from({1, n}, nn::fan_in_uniform(n, n, rng), true));
    p.gate_bias.push_back(Tensor::zeros({1}, true));
  }
  return p;
}

void QLSCParams::append_parameters(const std::string& prefix,
                                   std::vector<NamedTensor>& out) const {
  out.push_back({prefix + ".info", info});
  out.push_back({prefix + ".scale", scale});
  for (std::size_t g = 0; g < assign_weight.size(); ++g) {
    const std::string group = prefix + ".group" + std::to_string(g);
    out.push_back({group + ".assign.weight", assign_weight[g]});
    out.push_back({group + ".assign.bias", assign_bias[g]});
    out.push_back({group + ".gate.weight", gate_weight[g]});
    out.push_back({group + ".gate.bias", gate_bias[g]});
  }
}

namespace {

// Slice g of an m x n x len tensor as an n x len matrix.
Tensor group_slice(const Tensor& grouped, std::size_t g) {
  return reshape(slice(grouped, 0, g, g + 1),
                 {grouped.dim(1), grouped.dim(2)});
}

// softmax_j(queries_r . keys_j) applied to keys, added back to queries.
Tensor attend_and_add(const Tensor& queries, const Tensor& keys) {
  const Tensor scores = softmax_last_axis(matmul(queries, transpose(keys)));
  return add(queries, matmul(scores, keys));
}

}  // namespace

GroupedFeatures scale_and_split(const QLSCParams& params, const Tensor& h) {
  const std::size_t n = params.n(), m = params.m(), k = params.k();
  if (h.rank() != 2 || h.dim(0) != n) {
    throw DimensionError("scale_and_split: expected H with " +
                         std::to_string(n) + " rows, got shape " +
                         shape_str(h.shape()));
  }
  const std::size_t len = h.dim(1);
  return {reshape(matmul(params.scale, h), {m, n, len}),
          reshape(matmul(params.scale, params.info), {m, n, k})};
}

AssignmentAndGates assignment_and_gates(const QLSCParams& params,
                                        const GroupedFeatures& grouped) {
  const std::size_t n = params.n(), m = params.m(), k = params.k();
  if (grouped.h.rank() != 3 || grouped.h.dim(0) != m || grouped.h.dim(1) != n) {
    throw DimensionError("assignment_and_gates: grouped query has shape " +
                         shape_str(grouped.h.shape()));
  }
  const std::size_t len = grouped.h.dim(2);
  std::vector<Tensor> assigns, gates;
  for (std::size_t g = 0; g < m; ++g) {
    const Tensor tokens = transpose(group_slice(grouped.h, g));  // l x n
    assigns.push_back(softmax_last_axis(
        add(matmul(tokens, transpose(params.assign_weight[g])),
            params.assign_bias[g])));
    gates.push_back(sigmoid(add(matmul(tokens, transpose(params.gate_weight[g])),
                                params.gate_bias[g])));
  }
  return {reshape(concat(assigns, 1), {len, m, k}), concat(gates, 1)};
}

CenterSet aggregate_centers(const GroupedFeatures& grouped,
                            const AssignmentAndGates& ag) {
  if (grouped.h.rank() != 3 || grouped.c.rank() != 3 || ag.assign.rank() != 3 ||
      ag.gates.rank() != 2) {
    throw DimensionError("aggregate_centers: malformed inputs");
  }
  const std::size_t m = grouped.h.dim(0), n = grouped.h.dim(1),
                    len = grouped.h.dim(2), k = grouped.c.dim(2);
  if (grouped.c.dim(0) != m || grouped.c.dim(1) != n ||
      ag.assign.shape() != Shape{len, m, k} || ag.gates.shape() != Shape{len, m}) {
    throw DimensionError(
        "aggregate_centers: inconsistent shapes " + shape_str(grouped.h.shape()) +
        ", " + shape_str(grouped.c.shape()) + ", " + shape_str(ag.assign.shape()) +
        ", " + shape_str(ag.gates.shape()));
  }
  const Tensor assign = reshape(ag.assign, {len, m * k});
  Tensor total;
  for (std::size_t g = 0; g < m; ++g) {
    const Tensor gate = reshape(slice(ag.gates, 1, g, g + 1), {len});
    // weight[k, t] = alpha[t, g] * a[t, g, k]
    const Tensor weight =
        mul(transpose(slice(assign, 1, g * k, (g + 1) * k)), gate);
    const Tensor residual = weighted_residual_sum(
        weight, group_slice(grouped.h, g), group_slice(grouped.c, g));  // K x n
    total = total.defined() ? add(total, residual) : residual;
  }
  return {total};
}

Tensor calibrate(const Tensor& features, const CenterSet& centers) {
  if (features.rank() != 2 || centers.t.rank() != 2 ||
      features.dim(1) != centers.t.dim(1)) {
    throw DimensionError("calibrate: features " + shape_str(features.shape()) +
                         " vs centers " + shape_str(centers.t.shape()));
  }
  return attend_and_add(features, centers.t);
}

CenterSet enhance_centers_with_passage(const CenterSet& centers,
                                       const Tensor& passage) {
  if (passage.rank() != 2 || centers.t.rank() != 2 ||
      passage.dim(1) != centers.t.dim(1)) {
    throw DimensionError("enhance_centers_with_passage: centers " +
                         shape_str(centers.t.shape()) + " vs passage " +
                         shape_str(passage.shape()));
  }
  if (passage.dim(0) == 0) return centers;
  return {attend_and_add(centers.t, passage)};
}

QLSCOutput qlsc_forward(const QLSCConfig& config, const QLSCParams& params,
                        const Tensor& h, const Tensor& query_tokens,
                        const Tensor& passage_tokens) {
  config.validate();
  if (params.n() != config.n || params.m() != config.m || params.k() != config.k) {
    throw DimensionError("qlsc_forward: parameters do not match config");
  }
  if (query_tokens.rank() != 2 || query_tokens.dim(1) != config.n ||
      passage_tokens.rank() != 2 || passage_tokens.dim(1) != config.n ||
      h.rank() != 2 || h.dim(1) != query_tokens.dim(0)) {
    throw DimensionError("qlsc_forward: H " + shape_str(h.shape()) +
                         ", query " + shape_str(query_tokens.shape()) +
                         ", passage " + shape_str(passage_tokens.shape()) +
                         " inconsistent with n=" + std::to_string(config.n));
  }
  const GroupedFeatures grouped = scale_and_split(params, h);
  const AssignmentAndGates ag = assignment_and_gates(params, grouped);
  CenterSet centers = aggregate_centers(grouped, ag);
  if (config.enhance_from_passage) {
    centers = enhance_centers_with_passage(centers, passage_tokens);
  }
  QLSCOutput out;
  out.query = calibrate(query_tokens, centers);
  out.passage = config.calibrate_passage ? calibrate(passage_tokens, centers)
                                         : passage_tokens;
  out.centers = std::move(centers);
  return out;
}

}  // namespace qlsc
