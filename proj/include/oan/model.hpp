// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oan/diffcore/tape.hpp"
#include "oan/diffcore/tensor.hpp"
#include "oan/ontology_memory.hpp"

namespace oan {

using diff::Tape;
using diff::Tensor;

struct ModelDims {
    std::size_t d_in = 16;
    std::size_t hidden = 128;
    std::size_t embed = 64;
    std::size_t logits = 8;   // M, semantic logit width
    std::size_t classes = 10; // T_s, seen classes

    void validate() const;
};

using NamedParameter = std::pair<std::string, Tensor>;

/// y = x W + b with W stored as in x out.
struct Linear {
    Tensor weight;
    Tensor bias;

    static Linear init(std::size_t in, std::size_t out, std::mt19937_64& rng, bool requires_grad);
    Tensor forward(Tape& tape, const Tensor& x) const;
};

/// Shared trunk: x + modality_embedding[m] -> FC -> ReLU -> FC.
struct Encoder {
    Tensor modality_embedding;  // 2 x d_in, row per Modality
    Linear hidden;
    Linear out;

    Tensor forward(Tape& tape, const Tensor& inputs, std::span<const Modality> modality) const;
};

/// Student network: encoder, logit head G (d -> M) and classification head
/// C (d -> T_s), both reading the same embedding.
class OanModel {
public:
    OanModel(ModelDims dims, Encoder encoder, Linear logit_head, Linear class_head);

    const ModelDims& dims() const noexcept { return dims_; }

    Tensor embed(Tape& tape, const Tensor& inputs, std::span<const Modality> modality) const;

    struct HeadOutputs {
        Tensor logits;      // G, N x M
        Tensor class_logits; // C, N x T_s
    };
    HeadOutputs heads(Tape& tape, const Tensor& embedding) const;

    /// Stable order; names are used as checkpoint keys.
    std::vector<NamedParameter> named_parameters() const;
    std::size_t parameter_count() const;

private:
    ModelDims dims_;
    Encoder encoder_;
    Linear logit_head_;
    Linear class_head_;
};

/// Weights ~ N(0, 1/fan_in), biases zero, modality embedding ~ N(0, 0.1^2).
OanModel init_model(const ModelDims& dims, std::uint64_t seed);

/// Frozen teacher: encoder plus logit head, no classification head. Its
/// softened logits supply the semantic targets E.
class TeacherModel {
public:
    TeacherModel(ModelDims dims, Encoder encoder, Linear logit_head, double tau);

    const ModelDims& dims() const noexcept { return dims_; }
    double tau() const noexcept { return tau_; }
    bool frozen() const noexcept { return frozen_; }

    Tensor logits(Tape& tape, const Tensor& inputs, std::span<const Modality> modality) const;
    /// softmax(logits / tau), as a constant.
    Tensor distribution(const Tensor& inputs, std::span<const Modality> modality) const;

    /// Drops requires_grad from every parameter; irreversible.
    void freeze();

    std::vector<NamedParameter> named_parameters() const;

private:
    ModelDims dims_;
    Encoder encoder_;
    Linear logit_head_;
    double tau_;
    bool frozen_ = false;
};

/// Trainable teacher; the trainer pre-trains and then freezes it.
TeacherModel init_teacher(const ModelDims& dims, double tau, std::uint64_t seed);

/// Rebuilds models from named parameters (checkpoint loading).
OanModel model_from_parameters(const ModelDims& dims, const std::vector<NamedParameter>& params);
TeacherModel teacher_from_parameters(const ModelDims& dims, double tau, const std::vector<NamedParameter>& params);

} // namespace oan
