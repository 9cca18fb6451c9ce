// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "oan/diffcore/tape.hpp"
#include "oan/diffcore/tensor.hpp"

namespace oan::losses {

using diff::Tape;
using diff::Tensor;

struct InterClassLossConfig {
    double beta = 10.0;  // logit temperature
    double eta = 0.1;    // label smoothing
    /// Use the literal coefficients xi = -1/N - eta and eta/N instead of
    /// standard label smoothing.
    bool literal_coefficients = false;

    void validate() const;
};

/// Gaussian similarity kernel on pairwise distances:
///   D(d) = rho / (sigma sqrt(2 pi)) * exp(-(d - mu)^2 / (2 sigma^2)).
/// With the defaults (mu = 0, sigma^2 = 1/2, rho = sigma sqrt(2 pi)) this is
/// exactly exp(-d^2).
struct HypersphereKernel {
    double mu = 0.0;
    double sigma_sq = 0.5;
    double rho = std::sqrt(0.5) * std::sqrt(2.0 * std::numbers::pi);

    /// Kernel whose peak value is 1.
    static HypersphereKernel with_unit_peak(double mu, double sigma_sq);

    /// Peak-normalizing factor rho / (sigma sqrt(2 pi)).
    double amplitude() const;
    /// Plain evaluation at one distance.
    double operator()(double d) const;
    void validate() const;
};

enum class HcrMode { SelfDistill, TeacherStudent };

struct LossWeights {
    double lambda1 = 1.0;    // semantic
    double lambda2 = 0.001;  // inter-class
    double lambda3 = 0.1;    // hypersphere consistency

    void validate() const;
    bool operator==(const LossWeights&) const = default;
};

/// Distinct classes present in a batch, ascending, and each row's position
/// among them.
struct BatchCategories {
    std::vector<std::size_t> classes;
    std::vector<std::size_t> targets;
};

BatchCategories batch_categories(std::span<const std::size_t> labels);

/// Smooth inter-class independence loss over key-value logits
/// s_ij = beta * <K_j, V_i>, where `keys` holds the N_bc batch-category keys
/// and targets[i] is the key row of instance i. Gradient flows into values
/// only.
Tensor inter_class_loss(Tape& tape, const Tensor& values, std::span<const std::size_t> targets, const Tensor& keys,
                        const InterClassLossConfig& cfg);

/// Elementwise kernel over a distance matrix.
Tensor hypersphere_similarity(Tape& tape, const Tensor& dists, const HypersphereKernel& kernel);

/// Mean binary cross-entropy over ordered off-diagonal pairs between the
/// kernel similarities of `target_feats` (held constant) and of `pred_feats`
/// (differentiable, clamped to [1e-7, 1 - 1e-7]).
Tensor hcr_loss(Tape& tape, const Tensor& target_feats, const Tensor& pred_feats, const HypersphereKernel& kernel);

/// Self-distillation: classification outputs are the target, the student's
/// logit outputs are the prediction.
Tensor self_distill_hcr(Tape& tape, const Tensor& classification_out, const Tensor& student_logits,
                        const HypersphereKernel& kernel);

/// Teacher-student distillation: the frozen teacher's logit similarities are
/// the target, the classification outputs are the prediction.
Tensor teacher_student_hcr(Tape& tape, const Tensor& classification_out, const Tensor& teacher_logits,
                           const HypersphereKernel& kernel);

Tensor hcr(Tape& tape, HcrMode mode, const Tensor& classification_out, const Tensor& logits,
           const HypersphereKernel& kernel);

/// Mean cross-entropy of class logits against labels.
Tensor classification_loss(Tape& tape, const Tensor& class_logits, std::span<const std::size_t> labels);

/// Mean cross-entropy of student logits against the teacher distribution.
/// Teacher rows must be non-negative and sum to 1 within 1e-9.
Tensor semantic_loss(Tape& tape, const Tensor& student_logits, const Tensor& teacher_dist);

/// L = cls + lambda1 se + lambda2 in + lambda3 hcr.
Tensor total_loss(Tape& tape, const Tensor& cls, const Tensor& se, const Tensor& in_loss, const Tensor& hcr,
                  const LossWeights& weights);

} // namespace oan::losses
