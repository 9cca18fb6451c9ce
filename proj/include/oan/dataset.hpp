// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "oan/diffcore/tensor.hpp"
#include "oan/ontology_memory.hpp"

namespace oan {

struct Instance {
    std::vector<double> feature;
    std::size_t class_id = 0;
    Modality modality = Modality::Sketch;

    bool operator==(const Instance&) const = default;
};

/// Labeled sketch and image feature vectors. Every class has at least one
/// instance of each modality; all features share one width.
struct CrossModalDataset {
    std::size_t d_in = 0;
    std::size_t num_classes = 0;
    std::vector<Instance> instances;

    /// Throws ConfigError on a broken invariant.
    void validate() const;
    std::size_t count(std::size_t class_id, Modality m) const;

    bool operator==(const CrossModalDataset&) const = default;
};

/// Disjoint partition of the class ids; both lists ascending.
struct SeenUnseenSplit {
    std::vector<std::size_t> seen;
    std::vector<std::size_t> unseen;

    bool is_seen(std::size_t class_id) const;
    /// Position of a seen class in `seen` (its classifier / dictionary index).
    std::size_t seen_index(std::size_t class_id) const;
    void validate(std::size_t num_classes) const;

    bool operator==(const SeenUnseenSplit&) const = default;
};

struct SyntheticSpec {
    std::size_t num_classes = 15;
    std::size_t per_class_per_modality = 20;
    std::size_t d_in = 16;
    double modality_shift = 0.5;
    double noise_std = 0.1;
    std::uint64_t seed = 1;
};

/// Each class gets a unit-sphere prototype. Instances are
///   prototype + offset_m * modality_shift + N(0, noise_std^2)
/// where offset_m is one random unit vector per modality shared by all
/// classes. Instances are ordered by class, sketches before images.
CrossModalDataset generate_synthetic(const SyntheticSpec& spec);

/// Uniformly random choice of `num_unseen` held-out classes.
SeenUnseenSplit make_split(const CrossModalDataset& ds, std::size_t num_unseen, std::uint64_t seed);

/// Indices of all instances of seen classes, in dataset order.
std::vector<std::size_t> training_indices(const CrossModalDataset& ds, const SeenUnseenSplit& split);
std::vector<std::size_t> instances_of(const CrossModalDataset& ds, std::span<const std::size_t> classes, Modality m);

/// Stacks the features of the selected instances into an N x d_in tensor.
diff::Tensor gather_features(const CrossModalDataset& ds, std::span<const std::size_t> indices);
std::vector<Modality> gather_modality(const CrossModalDataset& ds, std::span<const std::size_t> indices);
std::vector<std::size_t> gather_labels(const CrossModalDataset& ds, std::span<const std::size_t> indices);

// "OANDS1" binary format, little-endian:
//   magic[6] | u32 instances | u32 d_in | u32 classes |
//   per instance: u32 class_id | u8 modality | f64 feature[d_in]
inline constexpr char kDatasetMagic[] = "OANDS1";

std::vector<char> encode_dataset(const CrossModalDataset& ds);
/// Throws FormatError (with byte offset) or VersionError.
CrossModalDataset decode_dataset(const std::vector<char>& bytes);

void save_dataset(const CrossModalDataset& ds, const std::filesystem::path& path);
CrossModalDataset load_dataset(const std::filesystem::path& path);

} // namespace oan
