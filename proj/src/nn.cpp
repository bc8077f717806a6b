// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "qlsc/nn.hpp"

#include <cmath>

namespace qlsc::nn {

std::vector<double> fan_in_uniform(std::size_t count, std::size_t fan_in,
                                   Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> values(count);
  for (auto& v : values) v = rng.uniform(-bound, bound);
  return values;
}

EmbeddingTable EmbeddingTable::init(std::size_t vocab_size, std::size_t dim,
                                    Rng& rng) {
  return {Tensor::from({vocab_size, dim},
                       fan_in_uniform(vocab_size * dim, dim, rng), true)};
}

Tensor embed(const EmbeddingTable& table, std::span<const int> ids) {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.vocab_size()) {
      throw VocabError("embed: token id " + std::to_string(id) +
                       " outside vocabulary of size " +
                       std::to_string(table.vocab_size()));
    }
    rows.push_back(static_cast<std::size_t>(id));
  }
  return transpose(gather_rows(table.table, rows));
}

LinearLayer LinearLayer::init(std::size_t in, std::size_t out, Rng& rng,
                              bool with_bias) {
  return {Tensor::from({out, in}, fan_in_uniform(out * in, in, rng), true),
          with_bias ? Tensor::zeros({out}, true) : Tensor{}};
}

Tensor linear_apply(const LinearLayer& layer, const Tensor& x) {
  if (x.rank() != 2 || x.dim(0) != layer.in_dim()) {
    throw DimensionError("linear_apply: layer expects " +
                         std::to_string(layer.in_dim()) +
                         " input rows, got shape " + shape_str(x.shape()));
  }
  if (!layer.bias.defined()) return matmul(layer.weight, x);
  // Row layout lets the bias broadcast along the trailing axis.
  return transpose(
      add(matmul(transpose(x), transpose(layer.weight)), layer.bias));
}

LSTMEncoder LSTMEncoder::init(std::size_t input_dim, std::size_t hidden,
                              Rng& rng) {
  LSTMEncoder enc;
  enc.w_x = Tensor::from({4 * hidden, input_dim},
                         fan_in_uniform(4 * hidden * input_dim, input_dim, rng),
                         true);
  enc.w_h = Tensor::from({4 * hidden, hidden},
                         fan_in_uniform(4 * hidden * hidden, hidden, rng), true);
  enc.bias = Tensor::zeros({4 * hidden}, true);
  return enc;
}

Tensor lstm_encode(const LSTMEncoder& enc, const Tensor& x) {
  if (x.rank() != 2 || x.dim(0) != enc.input_dim()) {
    throw DimensionError("lstm_encode: encoder expects " +
                         std::to_string(enc.input_dim()) +
                         " input rows, got shape " + shape_str(x.shape()));
  }
  const std::size_t steps = x.dim(1);
  if (steps == 0) throw ContractError("lstm_encode: empty input sequence");
  const std::size_t n = enc.hidden_dim();

  // Input contributions for all steps at once: l x 4n.
  const Tensor pre = add(matmul(transpose(x), transpose(enc.w_x)), enc.bias);
  const Tensor recurrent = transpose(enc.w_h);  // n x 4n

  Tensor h = Tensor::zeros({1, n});
  Tensor c = Tensor::zeros({1, n});
  std::vector<Tensor> outputs;
  outputs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor z = add(slice(pre, 0, t, t + 1), matmul(h, recurrent));
    const Tensor in_gate = sigmoid(slice(z, 1, 0, n));
    const Tensor forget_gate = sigmoid(slice(z, 1, n, 2 * n));
    const Tensor candidate = tanh(slice(z, 1, 2 * n, 3 * n));
    const Tensor out_gate = sigmoid(slice(z, 1, 3 * n, 4 * n));
    c = add(mul(forget_gate, c), mul(in_gate, candidate));
    h = mul(out_gate, tanh(c));
    outputs.push_back(h);
  }
  return transpose(concat(outputs, 0));
}

Tensor cross_entropy(const Tensor& logits, std::size_t gold_index) {
  if (logits.rank() != 1) {
    throw DimensionError("cross_entropy: expected rank-1 logits, got " +
                         shape_str(logits.shape()));
  }
  if (gold_index >= logits.dim(0)) {
    throw ContractError("cross_entropy: gold index " +
                        std::to_string(gold_index) + " outside " +
                        std::to_string(logits.dim(0)) + " classes");
  }
  const Tensor log_probs = log_softmax_last_axis(logits);
  return reshape(scale(slice(log_probs, 0, gold_index, gold_index + 1), -1.0),
                 {});
}

void append_parameters(const std::string& prefix, const EmbeddingTable& layer,
                       std::vector<NamedTensor>& out) {
  out.push_back({prefix + ".table", layer.table});
}

void append_parameters(const std::string& prefix, const LinearLayer& layer,
                       std::vector<NamedTensor>& out) {
  out.push_back({prefix + ".weight", layer.weight});
  if (layer.bias.defined()) out.push_back({prefix + ".bias", layer.bias});
}

void append_parameters(const std::string& prefix, const LSTMEncoder& layer,
                       std::vector<NamedTensor>& out) {
  out.push_back({prefix + ".w_x", layer.w_x});
  out.push_back({prefix + ".w_h", layer.w_h});
  out.push_back({prefix + ".bias", layer.bias});
}

}  // namespace qlsc::nn
