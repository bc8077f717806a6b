// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Layers used by the reader: token embeddings, affine maps, a single-layer
// unidirectional LSTM and cross-entropy. Sequences are laid out column-wise
// (features x tokens), matching the query feature matrix H = [h_1 ... h_l].

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qlsc/rng.hpp"
#include "qlsc/tensor.hpp"

namespace qlsc::nn {

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) entries.
std::vector<double> fan_in_uniform(std::size_t count, std::size_t fan_in,
                                   Rng& rng);

struct EmbeddingTable {
  Tensor table;  // vocab_size x n

  static EmbeddingTable init(std::size_t vocab_size, std::size_t dim, Rng& rng);
  std::size_t vocab_size() const { return table.dim(0); }
  std::size_t dim() const { return table.dim(1); }
};

/// n x l matrix whose column t is table row ids[t]. Throws VocabError on an
/// id outside [0, vocab_size).
Tensor embed(const EmbeddingTable& table, std::span<const int> ids);

struct LinearLayer {
  Tensor weight;  // out x in
  Tensor bias;    // out; undefined for a bias-free layer

  static LinearLayer init(std::size_t in, std::size_t out, Rng& rng,
                          bool with_bias = true);
  std::size_t in_dim() const { return weight.dim(1); }
  std::size_t out_dim() const { return weight.dim(0); }
};

/// weight * x + bias, the bias repeated over the l columns of x (in x l).
/// A bias-free layer computes weight * x.
Tensor linear_apply(const LinearLayer& layer, const Tensor& x);

/// Gate blocks are stacked in the order (input, forget, candidate, output)
/// along the 4n rows of w_x, w_h and bias.
struct LSTMEncoder {
  Tensor w_x;   // 4n x input
  Tensor w_h;   // 4n x n
  Tensor bias;  // 4n

  static LSTMEncoder init(std::size_t input_dim, std::size_t hidden, Rng& rng);
  std::size_t input_dim() const { return w_x.dim(1); }
  std::size_t hidden_dim() const { return w_h.dim(1); }
};

/// Runs the recurrence from h_0 = c_0 = 0 over the l columns of x and returns
/// [h_1 ... h_l] as an n x l matrix.
Tensor lstm_encode(const LSTMEncoder& enc, const Tensor& x);

/// -log softmax(logits)[gold], via log-sum-exp. logits is rank 1.
Tensor cross_entropy(const Tensor& logits, std::size_t gold_index);

void append_parameters(const std::string& prefix, const EmbeddingTable& layer,
                       std::vector<NamedTensor>& out);
void append_parameters(const std::string& prefix, const LinearLayer& layer,
                       std::vector<NamedTensor>& out);
void append_parameters(const std::string& prefix, const LSTMEncoder& layer,
                       std::vector<NamedTensor>& out);

}  // namespace qlsc::nn
