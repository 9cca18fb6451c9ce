// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "oan/dataset.hpp"
#include "oan/losses.hpp"
#include "oan/model.hpp"

namespace oan {

/// Everything that determines a training run besides the dataset.
struct TrainConfig {
    std::size_t epochs = 15;
    std::size_t batch_size = 64;
    double learning_rate = 0.05;
    std::uint64_t seed = 1;

    // Heavier than the LossWeights defaults: at 0.001 / 0.1 the alignment terms
    // barely move the synthetic benchmark.
    losses::LossWeights loss_weights{1.0, 0.1, 1.0};
    bool enable_in = true;
    bool enable_s_hcr = true;
    bool enable_t_hcr = false;

    double beta = 10.0;
    double eta = 0.1;
    double w = 0.01;    // key momentum
    double tau = 1.0;   // teacher temperature
    double kernel_mu = 0.0;
    double kernel_sigma_sq = 0.5;
    bool literal_coefficients = false;

    std::size_t d_in = 0;  // 0: take from the dataset
    std::size_t hidden = 128;
    std::size_t embed = 64;
    std::size_t semantic_dim = 8;  // M

    std::size_t teacher_epochs = 3;
    std::size_t num_unseen = 5;
    std::vector<std::size_t> ks = {10, 20};

    void validate() const;

    losses::InterClassLossConfig inter_class() const { return {beta, eta, literal_coefficients}; }
    losses::HypersphereKernel kernel() const {
        return losses::HypersphereKernel::with_unit_peak(kernel_mu, kernel_sigma_sq);
    }
    ModelDims dims(std::size_t num_seen_classes) const {
        return ModelDims{d_in, hidden, embed, semantic_dim, num_seen_classes};
    }

    bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
/// Overlays the keys present in `j` onto `cfg`; unknown keys throw
/// ConfigError.
void merge_json(TrainConfig& cfg, const nlohmann::json& j);

void to_json(nlohmann::json& j, const SyntheticSpec& spec);
void merge_json(SyntheticSpec& spec, const nlohmann::json& j);

/// Independent stream seed for a named purpose derived from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

namespace seed_stream {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kStudent = 2;
inline constexpr std::uint64_t kTeacher = 3;
inline constexpr std::uint64_t kDictionary = 4;
inline constexpr std::uint64_t kShuffle = 5;
inline constexpr std::uint64_t kTeacherShuffle = 6;
} // namespace seed_stream

} // namespace oan
