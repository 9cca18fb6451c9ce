// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "oan/diffcore/tape.hpp"
#include "oan/diffcore/tensor.hpp"

// Differentiable primitives. Each op computes its output eagerly and, when
// any input requires grad, appends its adjoint to the tape. Outputs of ops
// over constant inputs are constants and leave the tape untouched.
namespace oan::diff {

/// Norm below which a row is treated as degenerate by l2_normalize_rows.
inline constexpr double kMinRowNorm = 1e-12;

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape& tape, const Tensor& a);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
/// Adds a 1xn row to every row of an mxn tensor.
Tensor add_row(Tape& tape, const Tensor& a, const Tensor& row);
/// Elementwise product.
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);
/// factor * a + offset, elementwise.
Tensor affine(Tape& tape, const Tensor& a, double factor, double offset);

/// max(0, x); the subgradient at exactly 0 is 0.
Tensor relu(Tape& tape, const Tensor& x);
Tensor exp(Tape& tape, const Tensor& x);
Tensor log(Tape& tape, const Tensor& x);
/// Clamps into [lo, hi]. Gradient passes only where lo <= x <= hi.
Tensor clamp(Tape& tape, const Tensor& x, double lo, double hi);

/// Row-wise log-softmax using the max-shifted log-sum-exp.
Tensor log_softmax_rows(Tape& tape, const Tensor& x);
/// Scales every row to unit Euclidean norm. Throws DegenerateVectorError for
/// rows with norm below kMinRowNorm.
Tensor l2_normalize_rows(Tape& tape, const Tensor& x);
/// mxm matrix of squared Euclidean distances between rows of x.
Tensor pairwise_sq_dist(Tape& tape, const Tensor& x);

/// Sum of all entries as a 1x1 tensor.
Tensor sum(Tape& tape, const Tensor& x);
Tensor mean(Tape& tape, const Tensor& x);

/// Selects rows of a table by index; adjoints scatter-add back into the table.
Tensor gather_rows(Tape& tape, const Tensor& table, std::span<const std::size_t> indices);

} // namespace oan::diff
