// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/diffcore/tensor.hpp"

#include <cstring>

#include "oan/errors.hpp"

namespace oan::diff {

Tensor::Tensor() : node_(std::make_shared<Node>()) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad)
    : node_(std::make_shared<Node>()) {
    if (data.size() != rows * cols) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
    node_->rows = rows;
    node_->cols = cols;
    node_->data = std::move(data);
    node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
    return Tensor(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad);
}

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value, bool requires_grad) {
    return Tensor(rows, cols, std::vector<double>(rows * cols, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor(1, 1, {value}, requires_grad); }

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows, bool requires_grad) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.front().size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("ragged rows in Tensor::from_rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor(r, c, std::move(data), requires_grad);
}

std::string Tensor::shape_str() const { return std::to_string(rows()) + "x" + std::to_string(cols()); }

std::span<const double> Tensor::row(std::size_t r) const {
    if (r >= rows()) throw ShapeError("row " + std::to_string(r) + " out of range for " + shape_str());
    return std::span<const double>(node_->data).subspan(r * cols(), cols());
}

double Tensor::item() const {
    if (size() != 1) throw ShapeError("item() on non-scalar tensor of shape " + shape_str());
    return node_->data[0];
}

std::span<const double> Tensor::grad() const {
    if (!node_->grad) throw Error("tensor of shape " + shape_str() + " has no gradient");
    return *node_->grad;
}

std::vector<double>& Tensor::grad_storage() const {
    if (!node_->grad) node_->grad.emplace(node_->data.size(), 0.0);
    return *node_->grad;
}

Tensor Tensor::clone() const {
    Tensor out(rows(), cols(), node_->data, requires_grad());
    out.node_->grad = node_->grad;
    return out;
}

Tensor Tensor::detach() const { return Tensor(rows(), cols(), node_->data, false); }

bool Tensor::bit_equal(const Tensor& other) const noexcept {
    if (rows() != other.rows() || cols() != other.cols()) return false;
    if (size() == 0) return true;
    return std::memcmp(node_->data.data(), other.node_->data.data(), size() * sizeof(double)) == 0;
}

} // namespace oan::diff
