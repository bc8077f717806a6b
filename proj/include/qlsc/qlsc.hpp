// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Query latent semantic calibration.
//
// A learnable information matrix C (n x K) and the encoded query H (n x l) are
// both widened by a shared linear map W (mn x n) and split into m subspaces.
// Within each subspace every query token softly assigns itself to the K
// information vectors; the residuals between token and information vector,
// weighted by that assignment and by a learned per-token gate, are summed over
// tokens and subspaces into K latent semantic centers T (K x n). Token
// features are then calibrated by attending over T and adding the result:
//
//   a[t,g,:]  = softmax(A_g h~[g,:,t] + a_g)             assignment
//   alpha[t,g] = sigmoid(w_g . h~[g,:,t] + b_g)          gate
//   T[k]      = sum_{t,g} alpha[t,g] a[t,g,k] (h~[g,:,t] - c~[g,:,k])
//   q'_r      = q_r + sum_j softmax_j(q_r . T_j) T_j
//
// The dot product in the last line is deliberately unscaled.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qlsc/rng.hpp"
#include "qlsc/tensor.hpp"

namespace qlsc {

struct QLSCConfig {
  std::size_t n = 64;  // hidden width shared by H, C and token features
  std::size_t m = 2;   // subspaces
  std::size_t k = 32;  // information vectors / centers
  bool calibrate_passage = true;
  bool enhance_from_passage = true;

  void validate() const;
};

struct QLSCParams {
  Tensor info;                        // C: n x K
  Tensor scale;                       // W: mn x n
  std::vector<Tensor> assign_weight;  // per subspace: K x n
  std::vector<Tensor> assign_bias;    // per subspace: K
  std::vector<Tensor> gate_weight;    // per subspace: 1 x n
  std::vector<Tensor> gate_bias;      // per subspace: 1

  /// C ~ normal(0, 1/sqrt(n)); W and the per-subspace weights uniform in
  /// +-1/sqrt(n); biases zero.
  static QLSCParams init(const QLSCConfig& config, Rng& rng);

  std::size_t n() const { return scale.dim(1); }
  std::size_t m() const { return scale.dim(0) / scale.dim(1); }
  std::size_t k() const { return info.dim(1); }

  void append_parameters(const std::string& prefix,
                         std::vector<NamedTensor>& out) const;
};

struct GroupedFeatures {
  Tensor h;  // m x n x l
  Tensor c;  // m x n x K
};

struct AssignmentAndGates {
  Tensor assign;  // l x m x K, each [t, g, :] on the simplex
  Tensor gates;   // l x m, entries in (0, 1)
};

struct CenterSet {
  Tensor t;  // K x n
};

struct QLSCOutput {
  Tensor query;    // l_q x n
  Tensor passage;  // l_p x n
  CenterSet centers;
};

GroupedFeatures scale_and_split(const QLSCParams& params, const Tensor& h);

AssignmentAndGates assignment_and_gates(const QLSCParams& params,
                                        const GroupedFeatures& grouped);

CenterSet aggregate_centers(const GroupedFeatures& grouped,
                            const AssignmentAndGates& ag);

/// Each row r of `features` (rows x n) plus the attention-weighted sum of
/// center rows.
Tensor calibrate(const Tensor& features, const CenterSet& centers);

/// The same attention with roles swapped: every center row attends over the
/// passage rows (l_p x n). An empty passage leaves the centers unchanged.
CenterSet enhance_centers_with_passage(const CenterSet& centers,
                                       const Tensor& passage);

/// h: n x l_q encoded query; query_tokens: l_q x n; passage_tokens: l_p x n.
QLSCOutput qlsc_forward(const QLSCConfig& config, const QLSCParams& params,
                        const Tensor& h, const Tensor& query_tokens,
                        const Tensor& passage_tokens);

}  // namespace qlsc
