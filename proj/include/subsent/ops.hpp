// Copyright 2026 The subsent Authors. All Rights Reserved.
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

#include <cstdint>
#include <span>
#include <vector>

#include "subsent/autograd.hpp"

namespace subsent::num {

// Differentiable operations. Matrices are rank-2 (rows x cols); a rank-1
// tensor is treated as one row. All ops throw ShapeMismatch on incompatible
// operands.

Var matmul(const Var& a, const Var& b);     // (n x k)(k x m)
Var matmul_nt(const Var& a, const Var& b);  // a * b^T: (n x k)(m x k)^T
Var transpose(const Var& a);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
// x (n x c) plus a single row (1 x c) broadcast over every row.
Var add_row(const Var& x, const Var& row);

Var relu(const Var& x);
Var gelu(const Var& x);  // exact erf form

// Rows of `table` (V x H) selected by `ids`; ids outside [0, V) throw
// ShapeMismatch.
Var embedding(const Var& table, std::span<const std::int64_t> ids);

// Per-row normalization, then gamma * xhat + beta with gamma/beta of shape
// (1 x c).
Var layer_norm(const Var& x, const Var& gamma, const Var& beta,
               double eps = 1e-5);

// Length-preserving 1-D convolution over rows of x (L x Cin). weight has shape
// (K, Cin, Cout) with odd K; bias is (1 x Cout). Zero padding of K/2 each side.
// A nonzero `segment` treats x as stacked sequences of that many rows, each
// padded independently.
Var conv1d_same(const Var& x, const Var& weight, const Var& bias,
                std::size_t segment = 0);

// Counter-based random stream for dropout masks: the mask of a call depends
// only on (seed, call index, element index).
class DropoutStream {
 public:
  explicit DropoutStream(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_call() noexcept { return calls_++; }

 private:
  std::uint64_t seed_;
  std::uint64_t calls_ = 0;
};

// Inverted dropout. p == 0 returns x itself.
Var dropout(const Var& x, double p, DropoutStream& stream);

Var reshape(const Var& x, Shape shape);
Var slice_rows(const Var& x, std::size_t begin, std::size_t count);
Var slice_cols(const Var& x, std::size_t begin, std::size_t count);
Var concat_cols(std::span<const Var> parts);

// Row-wise softmax. Columns with key_mask[c] == 0 get probability exactly 0;
// an empty mask means every column is visible.
Var softmax_rows(const Var& x, std::span<const std::uint8_t> key_mask = {});

// Rows of x at the given indices, in order.
Var gather_rows(const Var& x, std::span<const std::size_t> rows);

// Scaled dot-product attention over stacked sequences. q, k and v are
// (batch * seq_len) x H, split into n_heads column groups. key_mask has one
// entry per row; keys with mask 0 receive exactly zero attention.
Var multi_head_attention(const Var& q, const Var& k, const Var& v,
                         std::size_t n_heads, std::size_t seq_len,
                         std::span<const std::uint8_t> key_mask);

Var sum(const Var& x);

std::uint64_t mix64(std::uint64_t x);
// Uniform double in [0, 1) from hashed counters.
double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t index);

}  // namespace subsent::num
