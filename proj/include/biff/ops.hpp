// Copyright 2026 The biff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "biff/tensor.hpp"

namespace biff::ops {

// y = x·w (+ b). x: [*, in], w: [in, out], b: [out].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor* b = nullptr);
Tensor matmul(const Tensor& a, const Tensor& b);
// Adds a [cols] vector to every row.
Tensor add_bias(const Tensor& x, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor relu(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor softmax(const Tensor& x, int axis = -1);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

struct MaxPool {
  Tensor values;
  std::vector<std::size_t> argmax;  // row index per column (per segment)
};

// Column-wise max over the rows of x: [n, d] -> [d]. Ties go to the lowest row.
MaxPool max_pool_rows(const Tensor& x);
// Column-wise max over row segments [offsets[i], offsets[i+1]): -> [segments, d].
// argmax holds absolute row indices, laid out [segments, d].
MaxPool segment_max(const Tensor& x, std::span<const std::size_t> offsets);

// Mean of 0.5 e^2 / beta for |e| < beta, |e| - 0.5 beta otherwise.
Tensor smooth_l1(const Tensor& pred, const Tensor& target, double beta = 1.0);
// Mean negative log-likelihood of softmax(logits) at the target columns.
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets);

Tensor reshape(const Tensor& x, Shape shape);
Tensor transpose(const Tensor& x);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
// [d] or [1, d] -> [n, d].
Tensor repeat_rows(const Tensor& x, std::size_t n);
// Per-head concatenation: row r becomes [a_h0, b_h0, a_h1, b_h1, ...].
Tensor interleave_heads(const Tensor& a, const Tensor& b, std::size_t heads);

struct AttentionWeights {
  std::vector<std::size_t> offsets;
  std::vector<double> weights;  // [pairs, heads]
  std::size_t heads = 1;
};

// Scaled dot-product attention where query i attends to key/value rows
// [offsets[i], offsets[i+1]). Keys are per pair, so relative encodings can be
// folded into them. Scale is 1/sqrt(query width / heads).
Tensor neighbor_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                          std::span<const std::size_t> offsets, std::size_t heads,
                          AttentionWeights* weights_out = nullptr);

}  // namespace biff::ops
