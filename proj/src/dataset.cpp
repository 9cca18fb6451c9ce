// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "oan/binary_io.hpp"
#include "oan/errors.hpp"

namespace oan {

namespace {

std::vector<double> random_unit(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(d);
    double ss = 0.0;
    do {
        ss = 0.0;
        for (double& x : v) {
            x = gauss(rng);
            ss += x * x;
        }
    } while (ss == 0.0);
    const double n = std::sqrt(ss);
    for (double& x : v) x /= n;
    return v;
}

} // namespace

void CrossModalDataset::validate() const {
    if (d_in == 0) throw ConfigError("dataset: d_in must be >= 1");
    std::vector<std::size_t> sketches(num_classes, 0), images(num_classes, 0);
    for (const auto& inst : instances) {
        if (inst.feature.size() != d_in) throw ConfigError("dataset: non-uniform feature width");
        if (inst.class_id >= num_classes) throw ConfigError("dataset: class id out of range");
        (inst.modality == Modality::Sketch ? sketches : images)[inst.class_id]++;
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (sketches[c] == 0 || images[c] == 0) {
            throw ConfigError("dataset: class " + std::to_string(c) + " lacks a sketch or an image instance");
        }
    }
}

std::size_t CrossModalDataset::count(std::size_t class_id, Modality m) const {
    return static_cast<std::size_t>(std::count_if(instances.begin(), instances.end(), [&](const Instance& i) {
        return i.class_id == class_id && i.modality == m;
    }));
}

bool SeenUnseenSplit::is_seen(std::size_t class_id) const {
    return std::binary_search(seen.begin(), seen.end(), class_id);
}

std::size_t SeenUnseenSplit::seen_index(std::size_t class_id) const {
    auto it = std::lower_bound(seen.begin(), seen.end(), class_id);
    if (it == seen.end() || *it != class_id) {
        throw LabelError("class " + std::to_string(class_id) + " is not a seen class");
    }
    return static_cast<std::size_t>(it - seen.begin());
}

void SeenUnseenSplit::validate(std::size_t num_classes) const {
    std::vector<int> hits(num_classes, 0);
    for (const auto* part : {&seen, &unseen}) {
        if (!std::is_sorted(part->begin(), part->end())) throw ConfigError("split: class lists must be sorted");
        for (std::size_t c : *part) {
            if (c >= num_classes) throw ConfigError("split: class id out of range");
            hits[c]++;
        }
    }
    for (int h : hits) {
        if (h != 1) throw ConfigError("split: seen and unseen must partition the classes");
    }
    if (seen.empty() || unseen.empty()) throw ConfigError("split: seen and unseen must both be non-empty");
}

CrossModalDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.num_classes < 2) throw ConfigError("generate_synthetic: num_classes must be >= 2");
    if (spec.per_class_per_modality < 1) throw ConfigError("generate_synthetic: per_class_per_modality must be >= 1");
    if (spec.d_in < 1) throw ConfigError("generate_synthetic: d_in must be >= 1");
    if (!(spec.noise_std >= 0.0)) throw ConfigError("generate_synthetic: noise_std must be >= 0");
    if (!std::isfinite(spec.modality_shift)) throw ConfigError("generate_synthetic: modality_shift must be finite");

    std::mt19937_64 rng(spec.seed);
    std::vector<std::vector<double>> prototypes;
    prototypes.reserve(spec.num_classes);
    for (std::size_t c = 0; c < spec.num_classes; ++c) prototypes.push_back(random_unit(spec.d_in, rng));
    const std::vector<double> sketch_offset = random_unit(spec.d_in, rng);
    const std::vector<double> image_offset = random_unit(spec.d_in, rng);

    std::normal_distribution<double> noise(0.0, 1.0);
    CrossModalDataset ds;
    ds.d_in = spec.d_in;
    ds.num_classes = spec.num_classes;
    ds.instances.reserve(spec.num_classes * spec.per_class_per_modality * 2);
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        for (Modality m : {Modality::Sketch, Modality::Image}) {
            const auto& offset = m == Modality::Sketch ? sketch_offset : image_offset;
            for (std::size_t k = 0; k < spec.per_class_per_modality; ++k) {
                Instance inst;
                inst.class_id = c;
                inst.modality = m;
                inst.feature.resize(spec.d_in);
                for (std::size_t j = 0; j < spec.d_in; ++j) {
                    inst.feature[j] = prototypes[c][j] + offset[j] * spec.modality_shift + spec.noise_std * noise(rng);
                }
                ds.instances.push_back(std::move(inst));
            }
        }
    }
    return ds;
}

SeenUnseenSplit make_split(const CrossModalDataset& ds, std::size_t num_unseen, std::uint64_t seed) {
    if (num_unseen < 1 || num_unseen >= ds.num_classes) {
        throw ConfigError("make_split: num_unseen must lie in [1, " + std::to_string(ds.num_classes) + ")");
    }
    std::vector<std::size_t> classes(ds.num_classes);
    std::iota(classes.begin(), classes.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(classes.begin(), classes.end(), rng);
    SeenUnseenSplit split;
    split.unseen.assign(classes.begin(), classes.begin() + static_cast<std::ptrdiff_t>(num_unseen));
    split.seen.assign(classes.begin() + static_cast<std::ptrdiff_t>(num_unseen), classes.end());
    std::sort(split.seen.begin(), split.seen.end());
    std::sort(split.unseen.begin(), split.unseen.end());
    return split;
}

std::vector<std::size_t> training_indices(const CrossModalDataset& ds, const SeenUnseenSplit& split) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
        if (split.is_seen(ds.instances[i].class_id)) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> instances_of(const CrossModalDataset& ds, std::span<const std::size_t> classes, Modality m) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
        const auto& inst = ds.instances[i];
        if (inst.modality == m && std::find(classes.begin(), classes.end(), inst.class_id) != classes.end()) {
            out.push_back(i);
        }
    }
    return out;
}

diff::Tensor gather_features(const CrossModalDataset& ds, std::span<const std::size_t> indices) {
    std::vector<double> data;
    data.reserve(indices.size() * ds.d_in);
    for (std::size_t i : indices) {
        const auto& f = ds.instances.at(i).feature;
        data.insert(data.end(), f.begin(), f.end());
    }
    return diff::Tensor(indices.size(), ds.d_in, std::move(data));
}

std::vector<Modality> gather_modality(const CrossModalDataset& ds, std::span<const std::size_t> indices) {
    std::vector<Modality> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(ds.instances.at(i).modality);
    return out;
}

std::vector<std::size_t> gather_labels(const CrossModalDataset& ds, std::span<const std::size_t> indices) {
    std::vector<std::size_t> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(ds.instances.at(i).class_id);
    return out;
}

std::vector<char> encode_dataset(const CrossModalDataset& ds) {
    ds.validate();
    io::ByteWriter w;
    w.bytes(std::string_view(kDatasetMagic, 6));
    w.u32(static_cast<std::uint32_t>(ds.instances.size()));
    w.u32(static_cast<std::uint32_t>(ds.d_in));
    w.u32(static_cast<std::uint32_t>(ds.num_classes));
    for (const auto& inst : ds.instances) {
        w.u32(static_cast<std::uint32_t>(inst.class_id));
        w.u8(static_cast<std::uint8_t>(inst.modality));
        for (double x : inst.feature) w.f64(x);
    }
    return w.buffer();
}

CrossModalDataset decode_dataset(const std::vector<char>& bytes) {
    io::ByteReader r(bytes);
    const std::string magic = r.bytes(6);
    if (magic.compare(0, 5, kDatasetMagic, 5) != 0) throw FormatError("not an OANDS dataset file", 0);
    if (magic[5] != kDatasetMagic[5]) {
        throw VersionError(std::string("unsupported dataset format version '") + magic[5] + "', expected '" +
                           kDatasetMagic[5] + "'");
    }
    const std::size_t n = r.u32();
    CrossModalDataset ds;
    ds.d_in = r.u32();
    ds.num_classes = r.u32();
    if (ds.d_in == 0) throw FormatError("d_in must be >= 1", 10);
    if (r.remaining() / (5 + 8 * ds.d_in) < n) {
        throw FormatError("file too short for " + std::to_string(n) + " instances", r.offset());
    }
    ds.instances.resize(n);
    for (auto& inst : ds.instances) {
        const std::size_t at = r.offset();
        inst.class_id = r.u32();
        if (inst.class_id >= ds.num_classes) throw FormatError("class id out of range", at);
        const std::uint8_t m = r.u8();
        if (m > 1) throw FormatError("invalid modality byte " + std::to_string(m), at + 4);
        inst.modality = static_cast<Modality>(m);
        inst.feature.resize(ds.d_in);
        for (double& x : inst.feature) x = r.f64();
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after last instance", r.offset());
    try {
        ds.validate();
    } catch (const ConfigError& e) {
        throw FormatError(e.what(), r.offset());
    }
    return ds;
}

void save_dataset(const CrossModalDataset& ds, const std::filesystem::path& path) {
    io::write_file(path, encode_dataset(ds));
}

CrossModalDataset load_dataset(const std::filesystem::path& path) { return decode_dataset(io::read_file(path)); }

} // namespace oan
