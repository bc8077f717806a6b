// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Slow, obviously-correct reference computations shared by the unit tests and
// the acceptance binary. Nothing here calls into the code under test except
// for reading tensor values.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qlsc/qlsc.hpp"
#include "qlsc/rng.hpp"
#include "qlsc/tensor.hpp"

namespace qlsc::oracle {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
  std::vector<double> data(shape_numel(shape));
  for (auto& v : data) v = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(data), requires_grad);
}

using Matrix = std::vector<std::vector<double>>;

// T[k][j] = sum_t sum_g gate[t,g] * a[t,g,k] * (h[g,j,t] - c[g,j,k]).
inline Matrix aggregate_centers(const Tensor& h, const Tensor& c, const Tensor& assign,
                                const Tensor& gates) {
  const std::size_t m = h.dim(0), n = h.dim(1), l = h.dim(2), K = c.dim(2);
  Matrix t(K, std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t tok = 0; tok < l; ++tok) {
        for (std::size_t g = 0; g < m; ++g) {
          t[k][j] += gates.at({tok, g}) * assign.at({tok, g, k}) *
                     (h.at({g, j, tok}) - c.at({g, j, k}));
        }
      }
    }
  }
  return t;
}

// out[r] = x[r] + sum_j softmax_j(x[r] . t[j]) t[j]
inline Matrix calibrate(const Matrix& x, const Matrix& t) {
  Matrix out = x;
  for (std::size_t r = 0; r < x.size(); ++r) {
    std::vector<double> score(t.size());
    double top = -INFINITY;
    for (std::size_t j = 0; j < t.size(); ++j) {
      score[j] = 0.0;
      for (std::size_t i = 0; i < x[r].size(); ++i) score[j] += x[r][i] * t[j][i];
      top = std::max(top, score[j]);
    }
    double total = 0.0;
    for (auto& s : score) total += (s = std::exp(s - top));
    for (std::size_t j = 0; j < t.size(); ++j) {
      for (std::size_t i = 0; i < x[r].size(); ++i) {
        out[r][i] += score[j] / total * t[j][i];
      }
    }
  }
  return out;
}

inline Matrix rows_of(const Tensor& x) {
  Matrix out(x.dim(0), std::vector<double>(x.dim(1)));
  for (std::size_t r = 0; r < x.dim(0); ++r) {
    for (std::size_t c = 0; c < x.dim(1); ++c) out[r][c] = x.at({r, c});
  }
  return out;
}

// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues in
// descending order with matching unit eigenvectors (as rows).
struct Eigen {
  std::vector<double> values;
  Matrix vectors;
};

inline Eigen symmetric_eigen(Matrix a) {
  const std::size_t d = a.size();
  Matrix v(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) off += a[p][q] * a[p][q];
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  Eigen out;
  for (std::size_t i : order) {
    out.values.push_back(a[i][i]);
    std::vector<double> vec(d);
    for (std::size_t k = 0; k < d; ++k) vec[k] = v[k][i];
    out.vectors.push_back(vec);
  }
  return out;
}

// Projections onto the top two eigenvectors of the 1/N covariance.
struct Pca {
  Matrix points;  // N x 2
  std::array<double, 2> variance{};
  double total = 0.0;
};

inline Pca pca_2d(const Matrix& x) {
  const std::size_t n = x.size(), d = x[0].size();
  std::vector<double> mean(d, 0.0);
  for (const auto& row : x) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j] / static_cast<double>(n);
  }
  Matrix cov(d, std::vector<double>(d, 0.0));
  for (const auto& row : x) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        cov[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]) / static_cast<double>(n);
      }
    }
  }
  const Eigen eig = symmetric_eigen(cov);
  Pca out;
  for (std::size_t i = 0; i < d; ++i) out.total += cov[i][i];
  out.variance = {eig.values[0], eig.values[1]};
  for (const auto& row : x) {
    std::vector<double> p(2, 0.0);
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t j = 0; j < d; ++j) p[c] += (row[j] - mean[j]) * eig.vectors[c][j];
    }
    out.points.push_back(p);
  }
  return out;
}

// Decodes UTF-8 into code points; enough for the fixtures.
inline std::u32string code_points(std::string_view s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const auto b = static_cast<unsigned char>(s[i]);
    int len = b < 0x80 ? 1 : b < 0xE0 ? 2 : b < 0xF0 ? 3 : 4;
    char32_t cp = len == 1 ? b : b & (0xFF >> (len + 1));
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

// Scans the context one code point at a time, numbering tokens as it goes
// (whitespace separates, each ASCII punctuation mark stands alone), and
// reports the token span whose characters exactly cover
// [answer_start, answer_start + answer length). nullopt when the answer edges
// fall inside a token or the covered text differs from the answer.
inline std::optional<std::pair<int, int>> char_scan_span(std::string_view context,
                                                         std::size_t answer_start,
                                                         std::string_view answer) {
  const std::u32string text = code_points(context);
  const std::u32string ans = code_points(answer);
  const std::size_t answer_end = answer_start + ans.size();
  if (ans.empty() || answer_end > text.size()) return std::nullopt;
  if (text.substr(answer_start, ans.size()) != ans) return std::nullopt;

  auto is_space = [](char32_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == 0xA0 || c == 0x2009;
  };
  // ASCII punctuation, then the non-ASCII marks the fixture uses.
  const std::u32string marks = U"–—‘’“”…«»¡¿·§¶、。「」";
  auto is_punct = [&](char32_t c) {
    if (c < 128) {
      return std::string_view("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~").find(
                 static_cast<char>(c)) != std::string_view::npos;
    }
    return marks.find(c) != std::u32string::npos;
  };
  int token = -1;
  bool in_word = false;
  std::vector<int> token_of(text.size(), -1);
  std::vector<bool> starts(text.size() + 1, false), ends(text.size() + 1, false);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char32_t c = text[i];
    if (is_space(c)) {
      if (in_word) ends[i] = true;
      in_word = false;
      continue;
    }
    if (is_punct(c)) {
      if (in_word) ends[i] = true;
      ++token;
      starts[i] = true;
      ends[i + 1] = true;
      token_of[i] = token;
      in_word = false;
      continue;
    }
    if (!in_word) {
      ++token;
      starts[i] = true;
      in_word = true;
    }
    token_of[i] = token;
  }
  if (in_word) ends[text.size()] = true;
  if (!starts[answer_start] || !ends[answer_end]) return std::nullopt;
  return std::pair<int, int>{token_of[answer_start], token_of[answer_end - 1]};
}

}  // namespace qlsc::oracle
