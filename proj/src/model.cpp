// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/model.hpp"

#include <cmath>
#include <map>

#include "oan/diffcore/ops.hpp"
#include "oan/errors.hpp"

namespace oan {

namespace {

Tensor gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng, bool requires_grad) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> data(rows * cols);
    for (double& x : data) x = dist(rng);
    return Tensor(rows, cols, std::move(data), requires_grad);
}

Encoder init_encoder(const ModelDims& dims, std::mt19937_64& rng, bool requires_grad) {
    Encoder enc;
    enc.modality_embedding = gaussian(2, dims.d_in, 0.1, rng, requires_grad);
    enc.hidden = Linear::init(dims.d_in, dims.hidden, rng, requires_grad);
    enc.out = Linear::init(dims.hidden, dims.embed, rng, requires_grad);
    return enc;
}

void append_encoder(std::vector<NamedParameter>& out, const Encoder& enc) {
    out.emplace_back("encoder.modality_embedding", enc.modality_embedding);
    out.emplace_back("encoder.hidden.weight", enc.hidden.weight);
    out.emplace_back("encoder.hidden.bias", enc.hidden.bias);
    out.emplace_back("encoder.out.weight", enc.out.weight);
    out.emplace_back("encoder.out.bias", enc.out.bias);
}

class ParameterTable {
public:
    explicit ParameterTable(const std::vector<NamedParameter>& params) {
        for (const auto& [name, t] : params) table_.emplace(name, t);
    }

    Tensor take(const std::string& name, std::size_t rows, std::size_t cols, bool requires_grad) const {
        auto it = table_.find(name);
        if (it == table_.end()) throw LookupError("missing parameter " + name);
        if (it->second.rows() != rows || it->second.cols() != cols) {
            throw ShapeError("parameter " + name + " has shape " + it->second.shape_str() + ", expected " +
                             std::to_string(rows) + "x" + std::to_string(cols));
        }
        Tensor t = it->second.clone();
        t.clear_grad();
        t.set_requires_grad(requires_grad);
        return t;
    }

    Linear linear(const std::string& prefix, std::size_t in, std::size_t out, bool requires_grad) const {
        return Linear{take(prefix + ".weight", in, out, requires_grad), take(prefix + ".bias", 1, out, requires_grad)};
    }

    Encoder encoder(const ModelDims& dims, bool requires_grad) const {
        return Encoder{take("encoder.modality_embedding", 2, dims.d_in, requires_grad),
                       linear("encoder.hidden", dims.d_in, dims.hidden, requires_grad),
                       linear("encoder.out", dims.hidden, dims.embed, requires_grad)};
    }

private:
    std::map<std::string, Tensor> table_;
};

} // namespace

void ModelDims::validate() const {
    if (d_in == 0 || hidden == 0 || embed == 0 || logits == 0 || classes == 0) {
        throw ConfigError("model dimensions must all be >= 1");
    }
}

Linear Linear::init(std::size_t in, std::size_t out, std::mt19937_64& rng, bool requires_grad) {
    return Linear{gaussian(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng, requires_grad),
                  Tensor::zeros(1, out, requires_grad)};
}

Tensor Linear::forward(Tape& tape, const Tensor& x) const {
    return diff::add_row(tape, diff::matmul(tape, x, weight), bias);
}

Tensor Encoder::forward(Tape& tape, const Tensor& inputs, std::span<const Modality> modality) const {
    if (inputs.cols() != modality_embedding.cols()) {
        throw ShapeError("encoder: input width " + std::to_string(inputs.cols()) + " != d_in " +
                         std::to_string(modality_embedding.cols()));
    }
    if (modality.size() != inputs.rows()) throw ShapeError("encoder: one modality flag per input row required");
    std::vector<std::size_t> idx;
    idx.reserve(modality.size());
    for (Modality m : modality) {
        if (m != Modality::Sketch && m != Modality::Image) throw ConfigError("encoder: invalid modality flag");
        idx.push_back(static_cast<std::size_t>(m));
    }
    Tensor conditioned = diff::add(tape, inputs, diff::gather_rows(tape, modality_embedding, idx));
    Tensor h = diff::relu(tape, hidden.forward(tape, conditioned));
    return out.forward(tape, h);
}

OanModel::OanModel(ModelDims dims, Encoder encoder, Linear logit_head, Linear class_head)
    : dims_(dims), encoder_(std::move(encoder)), logit_head_(std::move(logit_head)), class_head_(std::move(class_head)) {
    dims_.validate();
}

Tensor OanModel::embed(Tape& tape, const Tensor& inputs, std::span<const Modality> modality) const {
    return encoder_.forward(tape, inputs, modality);
}

OanModel::HeadOutputs OanModel::heads(Tape& tape, const Tensor& embedding) const {
    if (embedding.cols() != dims_.embed) {
        throw ShapeError("heads: embedding width " + std::to_string(embedding.cols()) + " != " +
                         std::to_string(dims_.embed));
    }
    return HeadOutputs{logit_head_.forward(tape, embedding), class_head_.forward(tape, embedding)};
}

std::vector<NamedParameter> OanModel::named_parameters() const {
    std::vector<NamedParameter> out;
    append_encoder(out, encoder_);
    out.emplace_back("logit_head.weight", logit_head_.weight);
    out.emplace_back("logit_head.bias", logit_head_.bias);
    out.emplace_back("class_head.weight", class_head_.weight);
    out.emplace_back("class_head.bias", class_head_.bias);
    return out;
}

std::size_t OanModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : named_parameters()) n += t.size();
    return n;
}

OanModel init_model(const ModelDims& dims, std::uint64_t seed) {
    dims.validate();
    std::mt19937_64 rng(seed);
    Encoder enc = init_encoder(dims, rng, true);
    Linear g = Linear::init(dims.embed, dims.logits, rng, true);
    Linear c = Linear::init(dims.embed, dims.classes, rng, true);
    return OanModel(dims, std::move(enc), std::move(g), std::move(c));
}

TeacherModel::TeacherModel(ModelDims dims, Encoder encoder, Linear logit_head, double tau)
    : dims_(dims), encoder_(std::move(encoder)), logit_head_(std::move(logit_head)), tau_(tau) {
    dims_.validate();
    if (!(tau > 0.0)) throw ConfigError("teacher temperature tau must be > 0");
}

Tensor TeacherModel::logits(Tape& tape, const Tensor& inputs, std::span<const Modality> modality) const {
    return logit_head_.forward(tape, encoder_.forward(tape, inputs, modality));
}

Tensor TeacherModel::distribution(const Tensor& inputs, std::span<const Modality> modality) const {
    Tape scratch;
    Tensor z = logits(scratch, inputs, modality).detach();
    Tensor logp = diff::log_softmax_rows(scratch, diff::scale(scratch, z, 1.0 / tau_));
    return diff::exp(scratch, logp);
}

void TeacherModel::freeze() {
    for (auto& [name, t] : named_parameters()) {
        Tensor p = t;
        p.set_requires_grad(false);
        p.clear_grad();
    }
    frozen_ = true;
}

std::vector<NamedParameter> TeacherModel::named_parameters() const {
    std::vector<NamedParameter> out;
    append_encoder(out, encoder_);
    out.emplace_back("logit_head.weight", logit_head_.weight);
    out.emplace_back("logit_head.bias", logit_head_.bias);
    return out;
}

TeacherModel init_teacher(const ModelDims& dims, double tau, std::uint64_t seed) {
    dims.validate();
    std::mt19937_64 rng(seed);
    Encoder enc = init_encoder(dims, rng, true);
    Linear g = Linear::init(dims.embed, dims.logits, rng, true);
    return TeacherModel(dims, std::move(enc), std::move(g), tau);
}

OanModel model_from_parameters(const ModelDims& dims, const std::vector<NamedParameter>& params) {
    dims.validate();
    ParameterTable table(params);
    return OanModel(dims, table.encoder(dims, true), table.linear("logit_head", dims.embed, dims.logits, true),
                    table.linear("class_head", dims.embed, dims.classes, true));
}

TeacherModel teacher_from_parameters(const ModelDims& dims, double tau, const std::vector<NamedParameter>& params) {
    dims.validate();
    ParameterTable table(params);
    TeacherModel t(dims, table.encoder(dims, false), table.linear("logit_head", dims.embed, dims.logits, false), tau);
    t.freeze();
    return t;
}

} // namespace oan
