// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/losses.hpp"

#include <algorithm>
#include <string>

#include "oan/diffcore/ops.hpp"
#include "oan/errors.hpp"

namespace oan::losses {

namespace {

constexpr double kBceClamp = 1e-7;

void require_finite_scalar(const Tensor& t, const char* term) {
    if (t.size() != 1) throw ShapeError(std::string("loss term ") + term + " is not a scalar: " + t.shape_str());
    if (!std::isfinite(t.item())) throw NumericError(std::string("loss term ") + term + " is not finite");
}

} // namespace

void InterClassLossConfig::validate() const {
    if (!(beta > 0.0)) throw ConfigError("inter-class loss: beta must be > 0");
    if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("inter-class loss: eta must lie in [0, 1)");
}

HypersphereKernel HypersphereKernel::with_unit_peak(double mu, double sigma_sq) {
    if (!(sigma_sq > 0.0)) throw ConfigError("hypersphere kernel: sigma_sq must be > 0");
    return HypersphereKernel{mu, sigma_sq, std::sqrt(sigma_sq) * std::sqrt(2.0 * std::numbers::pi)};
}

double HypersphereKernel::amplitude() const { return rho / (std::sqrt(sigma_sq) * std::sqrt(2.0 * std::numbers::pi)); }

double HypersphereKernel::operator()(double d) const {
    const double z = d - mu;
    return amplitude() * std::exp(-(z * z) / (2.0 * sigma_sq));
}

void HypersphereKernel::validate() const {
    if (!(sigma_sq > 0.0)) throw ConfigError("hypersphere kernel: sigma_sq must be > 0");
    if (!std::isfinite(mu) || !std::isfinite(rho)) throw ConfigError("hypersphere kernel: non-finite parameter");
}

void LossWeights::validate() const {
    for (double l : {lambda1, lambda2, lambda3}) {
        if (!std::isfinite(l) || l < 0.0) throw ConfigError("loss weights must be finite and >= 0");
    }
}

BatchCategories batch_categories(std::span<const std::size_t> labels) {
    BatchCategories out;
    out.classes.assign(labels.begin(), labels.end());
    std::sort(out.classes.begin(), out.classes.end());
    out.classes.erase(std::unique(out.classes.begin(), out.classes.end()), out.classes.end());
    out.targets.reserve(labels.size());
    for (std::size_t l : labels) {
        out.targets.push_back(static_cast<std::size_t>(
            std::lower_bound(out.classes.begin(), out.classes.end(), l) - out.classes.begin()));
    }
    return out;
}

Tensor inter_class_loss(Tape& tape, const Tensor& values, std::span<const std::size_t> targets, const Tensor& keys,
                        const InterClassLossConfig& cfg) {
    cfg.validate();
    const std::size_t n = values.rows();
    if (n == 0) throw EmptyBatchError("inter_class_loss: batch has no instances");
    if (targets.size() != n) throw ShapeError("inter_class_loss: one target per value row required");
    if (keys.cols() != values.cols()) {
        throw ShapeError("inter_class_loss: keys " + keys.shape_str() + " vs values " + values.shape_str());
    }
    const std::size_t nbc = keys.rows();
    if (nbc == 0) throw ShapeError("inter_class_loss: no category keys");
    for (std::size_t t : targets) {
        if (t >= nbc) throw LabelError("inter_class_loss: target " + std::to_string(t) + " has no key row");
    }

    const Tensor key_const = keys.detach();
    Tensor logits = diff::scale(tape, diff::matmul(tape, values, diff::transpose(tape, key_const)), cfg.beta);
    Tensor logp = diff::log_softmax_rows(tape, logits);

    // Signed weights so that the loss is sum(W * logp).
    const double nd = static_cast<double>(n);
    double w_target, w_all;
    if (cfg.literal_coefficients) {
        w_target = -1.0 / nd - cfg.eta;  // xi
        w_all = cfg.eta / nd;
    } else {
        w_target = -(1.0 - cfg.eta) / nd;
        w_all = -cfg.eta / (nd * static_cast<double>(nbc));
    }
    std::vector<double> w(n * nbc, w_all);
    for (std::size_t i = 0; i < n; ++i) w[i * nbc + targets[i]] += w_target;
    return diff::sum(tape, diff::mul(tape, Tensor(n, nbc, std::move(w)), logp));
}

Tensor hypersphere_similarity(Tape& tape, const Tensor& dists, const HypersphereKernel& kernel) {
    kernel.validate();
    Tensor centered = diff::affine(tape, dists, 1.0, -kernel.mu);
    Tensor sq = diff::mul(tape, centered, centered);
    Tensor gauss = diff::exp(tape, diff::scale(tape, sq, -1.0 / (2.0 * kernel.sigma_sq)));
    return diff::scale(tape, gauss, kernel.amplitude());
}

Tensor hcr_loss(Tape& tape, const Tensor& target_feats, const Tensor& pred_feats, const HypersphereKernel& kernel) {
    const std::size_t n = pred_feats.rows();
    if (n < 2 || target_feats.rows() < 2) throw InsufficientPairsError("hcr_loss: need at least 2 instances");
    if (target_feats.rows() != n) {
        throw ShapeError("hcr_loss: target " + target_feats.shape_str() + " and prediction " + pred_feats.shape_str() +
                         " are not aligned by instance");
    }

    // Target similarities are constants; the scratch tape is discarded.
    Tape scratch;
    const Tensor target = hypersphere_similarity(scratch, diff::pairwise_sq_dist(scratch, target_feats.detach()), kernel);

    Tensor s = hypersphere_similarity(tape, diff::pairwise_sq_dist(tape, pred_feats), kernel);
    s = diff::clamp(tape, s, kBceClamp, 1.0 - kBceClamp);
    Tensor log_s = diff::log(tape, s);
    Tensor log_not_s = diff::log(tape, diff::affine(tape, s, -1.0, 1.0));

    // Off-diagonal BCE weights, folding in the sign and the mean over pairs.
    const double inv_pairs = 1.0 / static_cast<double>(n * (n - 1));
    std::vector<double> wt(n * n, 0.0), wn(n * n, 0.0);
    auto td = target.data();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            wt[i * n + j] = -td[i * n + j] * inv_pairs;
            wn[i * n + j] = -(1.0 - td[i * n + j]) * inv_pairs;
        }
    }
    Tensor pos = diff::mul(tape, Tensor(n, n, std::move(wt)), log_s);
    Tensor neg = diff::mul(tape, Tensor(n, n, std::move(wn)), log_not_s);
    return diff::sum(tape, diff::add(tape, pos, neg));
}

Tensor self_distill_hcr(Tape& tape, const Tensor& classification_out, const Tensor& student_logits,
                        const HypersphereKernel& kernel) {
    return hcr_loss(tape, classification_out, student_logits, kernel);
}

Tensor teacher_student_hcr(Tape& tape, const Tensor& classification_out, const Tensor& teacher_logits,
                           const HypersphereKernel& kernel) {
    return hcr_loss(tape, teacher_logits, classification_out, kernel);
}

Tensor hcr(Tape& tape, HcrMode mode, const Tensor& classification_out, const Tensor& logits,
           const HypersphereKernel& kernel) {
    return mode == HcrMode::SelfDistill ? self_distill_hcr(tape, classification_out, logits, kernel)
                                        : teacher_student_hcr(tape, classification_out, logits, kernel);
}

Tensor classification_loss(Tape& tape, const Tensor& class_logits, std::span<const std::size_t> labels) {
    const std::size_t n = class_logits.rows(), k = class_logits.cols();
    if (n == 0) throw EmptyBatchError("classification_loss: empty batch");
    if (labels.size() != n) throw ShapeError("classification_loss: one label per row required");
    std::vector<double> w(n * k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] >= k) {
            throw LabelError("classification_loss: label " + std::to_string(labels[i]) + " outside " +
                             std::to_string(k) + " classes");
        }
        w[i * k + labels[i]] = -1.0 / static_cast<double>(n);
    }
    Tensor logp = diff::log_softmax_rows(tape, class_logits);
    return diff::sum(tape, diff::mul(tape, Tensor(n, k, std::move(w)), logp));
}

Tensor semantic_loss(Tape& tape, const Tensor& student_logits, const Tensor& teacher_dist) {
    const std::size_t n = student_logits.rows(), m = student_logits.cols();
    if (n == 0) throw EmptyBatchError("semantic_loss: empty batch");
    if (teacher_dist.rows() != n || teacher_dist.cols() != m) {
        throw ShapeError("semantic_loss: teacher " + teacher_dist.shape_str() + " vs student " +
                         student_logits.shape_str());
    }
    std::vector<double> w(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double e = teacher_dist(i, k);
            if (!(e >= 0.0)) throw DistributionError("semantic_loss: negative teacher probability in row " + std::to_string(i));
            s += e;
            w[i * m + k] = -e / static_cast<double>(n);
        }
        if (std::abs(s - 1.0) > 1e-9) {
            throw DistributionError("semantic_loss: teacher row " + std::to_string(i) + " sums to " + std::to_string(s));
        }
    }
    Tensor logp = diff::log_softmax_rows(tape, student_logits);
    return diff::sum(tape, diff::mul(tape, Tensor(n, m, std::move(w)), logp));
}

Tensor total_loss(Tape& tape, const Tensor& cls, const Tensor& se, const Tensor& in_loss, const Tensor& hcr,
                  const LossWeights& weights) {
    weights.validate();
    require_finite_scalar(cls, "cls");
    require_finite_scalar(se, "se");
    require_finite_scalar(in_loss, "in");
    require_finite_scalar(hcr, "hcr");
    Tensor total = diff::add(tape, cls, diff::scale(tape, se, weights.lambda1));
    total = diff::add(tape, total, diff::scale(tape, in_loss, weights.lambda2));
    return diff::add(tape, total, diff::scale(tape, hcr, weights.lambda3));
}

} // namespace oan::losses
