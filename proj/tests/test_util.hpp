// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "oan/diffcore/tensor.hpp"

namespace oan::test {

inline diff::Tensor random_tensor(std::size_t r, std::size_t c, std::uint64_t seed, bool grad = false,
                                  double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    std::vector<double> d(r * c);
    for (double& x : d) x = g(rng);
    return diff::Tensor(r, c, d, grad);
}

inline double row_norm(const diff::Tensor& t, std::size_t r) {
    double s = 0.0;
    for (std::size_t k = 0; k < t.cols(); ++k) s += t(r, k) * t(r, k);
    return std::sqrt(s);
}

} // namespace oan::test
