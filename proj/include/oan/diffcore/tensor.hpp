// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oan::diff {

/// Dense row-major matrix of doubles that can take part in reverse-mode
/// differentiation.
///
/// Tensor is a handle: copies share the same storage, which is what lets a
/// tape write adjoints back into model parameters. Use clone() for a deep
/// copy and detach() for a constant copy that never receives gradients.
class Tensor {
public:
    Tensor();
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
    static Tensor filled(std::size_t rows, std::size_t cols, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    /// Builds a tensor from nested rows; all rows must have equal length.
    static Tensor from_rows(const std::vector<std::vector<double>>& rows, bool requires_grad = false);

    std::size_t rows() const noexcept { return node_->rows; }
    std::size_t cols() const noexcept { return node_->cols; }
    std::size_t size() const noexcept { return node_->data.size(); }
    std::string shape_str() const;

    std::span<const double> data() const noexcept { return node_->data; }
    std::span<double> mutable_data() noexcept { return node_->data; }
    std::span<const double> row(std::size_t r) const;

    double operator()(std::size_t r, std::size_t c) const { return node_->data[r * node_->cols + c]; }
    double& operator()(std::size_t r, std::size_t c) { return node_->data[r * node_->cols + c]; }
    /// Value of a 1x1 tensor.
    double item() const;

    bool requires_grad() const noexcept { return node_->requires_grad; }
    void set_requires_grad(bool flag) noexcept { node_->requires_grad = flag; }

    bool has_grad() const noexcept { return node_->grad.has_value(); }
    std::span<const double> grad() const;
    double grad(std::size_t r, std::size_t c) const { return grad()[r * node_->cols + c]; }
    void clear_grad() noexcept { node_->grad.reset(); }
    /// Grad storage, zero-initialized on first use.
    std::vector<double>& grad_storage() const;

    Tensor clone() const;
    Tensor detach() const;

    /// True when both handles refer to the same storage.
    bool same_storage(const Tensor& other) const noexcept { return node_ == other.node_; }
    /// Bitwise equality of shape and data.
    bool bit_equal(const Tensor& other) const noexcept;

private:
    struct Node {
        std::size_t rows = 0;
        std::size_t cols = 0;
        std::vector<double> data;
        bool requires_grad = false;
        std::optional<std::vector<double>> grad;
    };
    std::shared_ptr<Node> node_;
};

} // namespace oan::diff
