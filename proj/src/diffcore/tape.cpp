// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/diffcore/tape.hpp"

#include <algorithm>

#include "oan/errors.hpp"

namespace oan::diff {

void Tape::record(std::string op, std::vector<Tensor> inputs, Tensor output, Adjoint adjoint) {
    records_.push_back(Record{std::move(op), std::move(inputs), std::move(output), std::move(adjoint)});
}

void Tape::backward(const Tensor& root) {
    if (root.size() != 1) throw ShapeError("backward() requires a scalar root, got " + root.shape_str());

    auto reset = [](Tensor t) {
        if (!t.requires_grad()) return;
        auto& g = t.grad_storage();
        std::fill(g.begin(), g.end(), 0.0);
    };
    for (auto& rec : records_) {
        for (auto& in : rec.inputs) reset(in);
        reset(rec.output);
    }
    Tensor r = root;
    if (!r.requires_grad()) return;
    r.grad_storage()[0] = 1.0;

    for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->adjoint();
}

bool any_requires_grad(std::initializer_list<const Tensor*> tensors) {
    return std::any_of(tensors.begin(), tensors.end(), [](const Tensor* t) { return t->requires_grad(); });
}

} // namespace oan::diff
