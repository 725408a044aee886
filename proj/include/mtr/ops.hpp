// Copyright 2026 The mtr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>

#include "mtr/tape.hpp"

// Differentiable primitives. Every op reads its operands' values from the tape,
// appends one node, and registers the hand-derived adjoint. Shapes are
// matrices; a "column" argument means an N x 1 array aligned with rows.
namespace mtr::ops {

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double factor);
// factor * a + offset, elementwise.
Var affine(Tape& t, Var a, double factor, double offset);

// a (N x C) + row (1 x C) broadcast over rows.
Var add_row(Tape& t, Var a, Var row);
// Repeats a 1 x C row n times.
Var broadcast_rows(Tape& t, Var row, std::size_t n);
// a (N x C) with row i scaled by col (N x 1)[i].
Var mul_col(Tape& t, Var a, Var col);

Var matmul(Tape& t, Var a, Var b);
// a (N x K) times b (M x K) transposed.
Var matmul_nt(Tape& t, Var a, Var b);

Var tanh(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var exp(Tape& t, Var a);
Var log(Tape& t, Var a);

Var concat_cols(Tape& t, Var a, Var b);
Var slice_cols(Tape& t, Var a, std::size_t begin, std::size_t end);

// Row-wise L2 normalization. Throws ZeroNorm if any row norm < kMinNorm.
Var normalize_rows(Tape& t, Var a);
// Row-wise dot product, N x 1.
Var row_dot(Tape& t, Var a, Var b);
// Elementwise arccos after clamping into [-kCosClamp, kCosClamp].
Var clamp_arccos(Tape& t, Var c);
// Row-wise slerp from u to v with per-row coefficient lambda (N x 1).
Var slerp_rows(Tape& t, Var u, Var v, Var lambda);

// Row i of `x` (N x K) times the K x C matrix stored row-major in row i of
// `mats` (N x K*C). Result is N x C.
Var rowvec_matmul(Tape& t, Var x, Var mats, std::size_t out_cols);
// Per-row ||A^T A - I||_F^2 where row i of `mats` stores A (rows x rank)
// row-major. Result is N x 1.
Var ortho_penalty(Tape& t, Var mats, std::size_t rank);
// Per-row sum of squares, N x 1.
Var sum_squares_rows(Tape& t, Var a);

Var sum_all(Tape& t, Var a);
Var mean_all(Tape& t, Var a);

// Mean over rows of softmax cross-entropy with the diagonal as the target
// class: (1/N) sum_i (logsumexp_j z_ij - z_ii). Input must be square.
Var softmax_xent_diag(Tape& t, Var logits);

// Constant copy of a's value; blocks gradient flow.
Var detach(Tape& t, Var a);

}  // namespace mtr::ops
