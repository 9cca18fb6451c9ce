// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/ontology_memory.hpp"

#include <cmath>
#include <random>
#include <string>

#include "oan/diffcore/ops.hpp"
#include "oan/errors.hpp"

namespace oan {

OntologyDictionary::OntologyDictionary(diff::Tensor keys, double momentum) : keys_(keys.detach()), momentum_(momentum) {
    if (!(momentum >= 0.0 && momentum <= 1.0)) throw ConfigError("dictionary momentum must lie in [0, 1]");
    if (keys_.rows() < 1) throw ConfigError("dictionary needs at least one class");
    if (keys_.cols() < 2) throw ConfigError("dictionary dim must be >= 2");
}

void OntologyDictionary::update(const BatchValues& batch) {
    const auto& v = batch.values;
    if (v.cols() != dim()) {
        throw ShapeError("update_keys: value width " + std::to_string(v.cols()) + " != key dim " + std::to_string(dim()));
    }
    if (batch.labels.size() != v.rows()) throw ShapeError("update_keys: label count does not match value rows");
    for (std::size_t c : batch.labels) {
        if (c >= num_classes()) throw LabelError("update_keys: class " + std::to_string(c) + " is not a seen class");
    }
    for (double x : v.data()) {
        if (!std::isfinite(x)) throw NumericError("update_keys: non-finite batch value");
    }

    const std::size_t d = dim();
    const double w = momentum_;
    std::vector<double> blended(d);
    for (std::size_t i = 0; i < v.rows(); ++i) {
        const std::size_t c = batch.labels[i];
        auto vi = v.row(i);
        double ss = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            blended[k] = w * keys_(c, k) + (1.0 - w) * vi[k];
            ss += blended[k] * blended[k];
        }
        const double nrm = std::sqrt(ss);
        if (!(nrm >= diff::kMinRowNorm)) {
            throw DegenerateVectorError("update_keys: blended key for class " + std::to_string(c) + " has zero norm");
        }
        for (std::size_t k = 0; k < d; ++k) keys_(c, k) = blended[k] / nrm;
    }
}

diff::Tensor OntologyDictionary::lookup(std::span<const std::size_t> class_ids) const {
    for (std::size_t c : class_ids) {
        if (c >= num_classes()) {
            throw LookupError("lookup_keys: class " + std::to_string(c) + " out of range (" +
                              std::to_string(num_classes()) + " keys)");
        }
    }
    diff::Tape scratch;
    return diff::gather_rows(scratch, keys_, class_ids);
}

OntologyDictionary init_dictionary(std::size_t num_classes, std::size_t dim, double momentum, std::uint64_t seed) {
    if (num_classes < 1) throw ConfigError("init_dictionary: num_classes must be >= 1");
    if (dim < 2) throw ConfigError("init_dictionary: dim must be >= 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> data(num_classes * dim);
    for (double& x : data) x = gauss(rng);
    diff::Tape scratch;
    diff::Tensor keys = diff::l2_normalize_rows(scratch, diff::Tensor(num_classes, dim, std::move(data)));
    return OntologyDictionary(keys, momentum);
}

} // namespace oan
