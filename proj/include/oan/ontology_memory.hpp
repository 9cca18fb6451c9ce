// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "oan/diffcore/tensor.hpp"

namespace oan {

enum class Modality : std::uint8_t { Sketch = 0, Image = 1 };

/// Embeddings of one mini-batch together with the seen-class index and
/// modality of every row.
struct BatchValues {
    diff::Tensor values;               // N x d
    std::vector<std::size_t> labels;   // seen-class index per row
    std::vector<Modality> modality;    // per row
};

/// Persistent per-class ontology keys. Each row is a unit-norm class center
/// moved towards in-batch instance features by a momentum rule; keys never
/// take part in gradient descent.
class OntologyDictionary {
public:
    OntologyDictionary(diff::Tensor keys, double momentum);

    std::size_t num_classes() const noexcept { return keys_.rows(); }
    std::size_t dim() const noexcept { return keys_.cols(); }
    double momentum() const noexcept { return momentum_; }
    const diff::Tensor& keys() const noexcept { return keys_; }

    /// For every instance i of class c, in batch order:
    ///   K_c <- w K_c + (1 - w) V_i,  then  K_c <- K_c / ||K_c||.
    /// Keys of classes absent from the batch are left bit-identical.
    void update(const BatchValues& batch);

    /// Constant copy of the key rows for `class_ids`, in the given order.
    diff::Tensor lookup(std::span<const std::size_t> class_ids) const;

private:
    diff::Tensor keys_;
    double momentum_;
};

/// Keys drawn from an isotropic Gaussian and row-normalized.
OntologyDictionary init_dictionary(std::size_t num_classes, std::size_t dim, double momentum, std::uint64_t seed);

} // namespace oan
