// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/checkpoint.hpp"

#include <optional>
#include <string>

#include "oan/binary_io.hpp"
#include "oan/errors.hpp"

namespace oan {

namespace {

void write_tensor(io::ByteWriter& w, const std::string& name, const Tensor& t) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rows()));
    w.u32(static_cast<std::uint32_t>(t.cols()));
    for (double x : t.data()) w.f64(x);
}

void write_indices(io::ByteWriter& w, const std::vector<std::size_t>& v) {
    w.u32(static_cast<std::uint32_t>(v.size()));
    for (std::size_t x : v) w.u32(static_cast<std::uint32_t>(x));
}

std::vector<std::size_t> read_indices(io::ByteReader& r) {
    const std::uint32_t n = r.u32();
    if (r.remaining() / 4 < n) throw FormatError("index list longer than file", r.offset());
    std::vector<std::size_t> v(n);
    for (auto& x : v) x = r.u32();
    return v;
}

} // namespace

std::vector<char> encode_checkpoint(const TrainState& state) {
    io::ByteWriter w;
    w.bytes(std::string_view(kCheckpointMagic, 6));
    w.str(nlohmann::json(state.config).dump());
    w.u32(static_cast<std::uint32_t>(state.epoch));
    write_indices(w, state.split.seen);
    write_indices(w, state.split.unseen);

    w.u32(static_cast<std::uint32_t>(state.history.size()));
    for (const auto& m : state.history) {
        w.u32(static_cast<std::uint32_t>(m.epoch));
        w.u32(static_cast<std::uint32_t>(m.batches));
        w.u32(static_cast<std::uint32_t>(m.dropped));
        for (double x : {m.lr, m.total, m.cls, m.se, m.in, m.s_hcr, m.t_hcr}) w.f64(x);
    }

    const auto student = state.model.named_parameters();
    const auto teacher = state.teacher.named_parameters();
    w.u32(static_cast<std::uint32_t>(student.size() + teacher.size() + 1));
    for (const auto& [name, t] : student) write_tensor(w, "student." + name, t);
    for (const auto& [name, t] : teacher) write_tensor(w, "teacher." + name, t);
    write_tensor(w, "dictionary.keys", state.dictionary.keys());
    return w.buffer();
}

TrainState decode_checkpoint(const std::vector<char>& bytes) {
    io::ByteReader r(bytes);
    const std::string magic = r.bytes(6);
    if (magic.compare(0, 5, kCheckpointMagic, 5) != 0) throw FormatError("not an OANCK checkpoint", 0);
    if (magic[5] != kCheckpointMagic[5]) {
        throw VersionError(std::string("unsupported checkpoint version '") + magic[5] + "', expected '" +
                           kCheckpointMagic[5] + "'");
    }

    const std::size_t config_at = r.offset();
    TrainConfig cfg;
    try {
        merge_json(cfg, nlohmann::json::parse(r.str()));
        cfg.validate();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("config is not valid JSON: ") + e.what(), config_at);
    } catch (const ConfigError& e) {
        throw FormatError(std::string("invalid config: ") + e.what(), config_at);
    }

    const std::size_t epoch = r.u32();
    SeenUnseenSplit split;
    split.seen = read_indices(r);
    split.unseen = read_indices(r);
    try {
        split.validate(split.seen.size() + split.unseen.size());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("invalid split: ") + e.what(), r.offset());
    }

    std::vector<EpochMetrics> history(r.u32());
    for (auto& m : history) {
        m.epoch = r.u32();
        m.batches = r.u32();
        m.dropped = r.u32();
        for (double* x : {&m.lr, &m.total, &m.cls, &m.se, &m.in, &m.s_hcr, &m.t_hcr}) *x = r.f64();
    }

    const std::uint32_t n_tensors = r.u32();
    std::vector<NamedParameter> student, teacher;
    std::optional<Tensor> keys;
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        const std::size_t at = r.offset();
        std::string name = r.str();
        const std::size_t rows = r.u32();
        const std::size_t cols = r.u32();
        if (cols != 0 && r.remaining() / 8 / cols < rows) throw FormatError("tensor " + name + " exceeds file size", at);
        std::vector<double> data(rows * cols);
        for (double& x : data) x = r.f64();
        Tensor t(rows, cols, std::move(data));
        if (name.rfind("student.", 0) == 0) {
            student.emplace_back(name.substr(8), t);
        } else if (name.rfind("teacher.", 0) == 0) {
            teacher.emplace_back(name.substr(8), t);
        } else if (name == "dictionary.keys") {
            keys = t;
        } else {
            throw FormatError("unknown tensor " + name, at);
        }
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after last tensor", r.offset());
    if (!keys) throw FormatError("missing dictionary.keys", r.offset());

    try {
        const ModelDims dims = cfg.dims(split.seen.size());
        if (keys->rows() != split.seen.size() || keys->cols() != cfg.embed) {
            throw ShapeError("dictionary.keys has shape " + keys->shape_str());
        }
        return TrainState{cfg,
                          std::move(split),
                          model_from_parameters(dims, student),
                          teacher_from_parameters(dims, cfg.tau, teacher),
                          OntologyDictionary(*keys, cfg.w),
                          epoch,
                          std::move(history)};
    } catch (const Error& e) {
        if (dynamic_cast<const FormatError*>(&e)) throw;
        throw FormatError(std::string("inconsistent checkpoint: ") + e.what(), r.offset());
    }
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
    io::write_file(path, encode_checkpoint(state));
}

TrainState load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

} // namespace oan
