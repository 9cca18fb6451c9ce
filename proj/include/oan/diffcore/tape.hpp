// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "oan/diffcore/tensor.hpp"

namespace oan::diff {

/// Ordered record of differentiable operations.
///
/// Every op that has at least one input with requires_grad appends one
/// record holding its inputs, its output and an adjoint closure. backward()
/// replays the closures in exact reverse order. A tape is a single-threaded
/// unit of work; use one tape per forward pass.
class Tape {
public:
    /// Reads output.grad() and accumulates into the grads of the inputs.
    using Adjoint = std::function<void()>;

    struct Record {
        std::string op;
        std::vector<Tensor> inputs;
        Tensor output;
        Adjoint adjoint;
    };

    void record(std::string op, std::vector<Tensor> inputs, Tensor output, Adjoint adjoint);

    /// Reverse pass from a 1x1 root. Gradients of every tensor reachable from
    /// the tape are reset first, so the result does not depend on earlier
    /// backward calls. Afterwards every tensor on the tape that requires grad
    /// holds a grad, zero if it did not influence the root.
    void backward(const Tensor& root);

    std::size_t size() const noexcept { return records_.size(); }
    const std::vector<Record>& records() const noexcept { return records_; }
    void clear() noexcept { records_.clear(); }

private:
    std::vector<Record> records_;
};

/// True when any tensor in the list requires grad.
bool any_requires_grad(std::initializer_list<const Tensor*> tensors);

} // namespace oan::diff
