// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <set>

#include "oan/binary_io.hpp"
#include "oan/checkpoint.hpp"
#include "oan/config.hpp"
#include "oan/errors.hpp"
#include "oan/trainer.hpp"

using namespace oan;
using nlohmann::json;

TEST_CASE("defaults") {
    const TrainConfig cfg;
    CHECK(cfg.epochs == 15);
    CHECK(cfg.batch_size >= 2);
    CHECK(cfg.beta == 10.0);
    CHECK(cfg.eta == 0.1);
    CHECK(cfg.tau == 1.0);
    CHECK(cfg.kernel().amplitude() == 1.0);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config json round trip") {
    TrainConfig cfg;
    cfg.epochs = 7;
    cfg.loss_weights = {0.5, 0.25, 2.0};
    cfg.enable_t_hcr = true;
    cfg.ks = {1, 100};
    cfg.seed = 1234567890123ULL;
    TrainConfig back;
    merge_json(back, json(cfg));
    CHECK(back == cfg);

    SyntheticSpec s;
    s.noise_std = 0.3;
    s.seed = 5;
    SyntheticSpec sb;
    merge_json(sb, json(s));
    CHECK(json(sb) == json(s));
}

TEST_CASE("merge overlays only the given keys and rejects unknown ones") {
    TrainConfig cfg;
    merge_json(cfg, json::parse(R"({"epochs": 3, "weights": [1, 0.5, 0.25]})"));
    CHECK(cfg.epochs == 3);
    CHECK(cfg.loss_weights.lambda2 == 0.5);
    CHECK(cfg.batch_size == TrainConfig{}.batch_size);
    CHECK_THROWS_AS(merge_json(cfg, json::parse(R"({"epoch": 3})")), ConfigError);
    CHECK_THROWS_AS(merge_json(cfg, json::parse(R"({"weights": [1, 2]})")), ConfigError);
    CHECK_THROWS_AS(merge_json(cfg, json::parse(R"({"epochs": "many"})")), ConfigError);
    CHECK_THROWS_AS(merge_json(cfg, json::parse("[1]")), ConfigError);
    SyntheticSpec s;
    CHECK_THROWS_AS(merge_json(s, json::parse(R"({"noise_std": 1})")), ConfigError);
}

TEST_CASE("validation") {
    auto bad = [](auto mutate) {
        TrainConfig c;
        mutate(c);
        CHECK_THROWS_AS(c.validate(), ConfigError);
    };
    bad([](TrainConfig& c) { c.epochs = 0; });
    bad([](TrainConfig& c) { c.batch_size = 1; });
    bad([](TrainConfig& c) { c.w = 1.5; });
    bad([](TrainConfig& c) { c.tau = 0.0; });
    bad([](TrainConfig& c) { c.eta = 1.0; });
    bad([](TrainConfig& c) { c.beta = -1.0; });
    bad([](TrainConfig& c) { c.kernel_sigma_sq = 0.0; });
    bad([](TrainConfig& c) { c.ks = {}; });
    bad([](TrainConfig& c) { c.ks = {0}; });
    bad([](TrainConfig& c) { c.loss_weights.lambda3 = -1.0; });
}

TEST_CASE("derived seeds differ per stream and per seed") {
    std::set<std::uint64_t> s;
    for (std::uint64_t seed = 0; seed < 10; ++seed)
        for (std::uint64_t stream = 1; stream <= 6; ++stream) s.insert(derive_seed(seed, stream));
    CHECK(s.size() == 60);
    CHECK(derive_seed(3, 2) == derive_seed(3, 2));
}

namespace {

TrainResult small_run() {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.hidden = 16;
    cfg.embed = 8;
    cfg.teacher_epochs = 1;
    cfg.enable_t_hcr = true;
    SyntheticSpec s;
    s.per_class_per_modality = 6;
    return run_training(cfg, generate_synthetic(s));
}

} // namespace

TEST_CASE("checkpoint round trip is bit-exact and reproduces probe outputs") {
    const auto r = small_run();
    const auto bytes = encode_checkpoint(r.state);
    const TrainState back = decode_checkpoint(bytes);
    CHECK(encode_checkpoint(back) == bytes);
    CHECK(back.config == r.state.config);
    CHECK(back.split == r.state.split);
    CHECK(back.history == r.state.history);
    CHECK(back.epoch == 2);
    CHECK(back.teacher.frozen());

    SyntheticSpec s;
    s.per_class_per_modality = 6;
    const auto ds = generate_synthetic(s);
    const std::vector<std::size_t> probe = {0, 7, 13, 50, 99, 150};
    const Tensor x = gather_features(ds, probe);
    const auto m = gather_modality(ds, probe);
    Tape t1, t2;
    const Tensor e1 = r.state.model.embed(t1, x, m), e2 = back.model.embed(t2, x, m);
    CHECK(e1.bit_equal(e2));
    CHECK(r.state.model.heads(t1, e1).class_logits.bit_equal(back.model.heads(t2, e2).class_logits));
    CHECK(r.state.teacher.distribution(x, m).bit_equal(back.teacher.distribution(x, m)));

    const auto path = std::filesystem::temp_directory_path() / "oan_test.oanck";
    save_checkpoint(r.state, path);
    CHECK(io::read_file(path) == bytes);
    CHECK(encode_checkpoint(load_checkpoint(path)) == bytes);
    std::filesystem::remove(path);
}

TEST_CASE("malformed checkpoints") {
    const auto bytes = encode_checkpoint(small_run().state);
    auto v = bytes;
    v[5] = '9';
    CHECK_THROWS_AS(decode_checkpoint(v), VersionError);
    auto m = bytes;
    m[0] = 'Z';
    CHECK_THROWS_AS(decode_checkpoint(m), FormatError);
    for (std::size_t cut : {std::size_t{3}, std::size_t{40}, bytes.size() / 2, bytes.size() - 1}) {
        auto t = bytes;
        t.resize(cut);
        CHECK_THROWS_AS(decode_checkpoint(t), FormatError);
    }
    auto extra = bytes;
    extra.push_back(0);
    CHECK_THROWS_AS(decode_checkpoint(extra), FormatError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/x.oanck"), IoError);
}

TEST_CASE("file digest is stable and content sensitive") {
    const auto path = std::filesystem::temp_directory_path() / "oan_digest.bin";
    io::write_file(path, std::vector<char>{'a', 'b'});
    const auto d1 = io::file_digest(path);
    CHECK(d1.size() == 16);
    CHECK(io::file_digest(path) == d1);
    io::write_file(path, std::vector<char>{'a', 'c'});
    CHECK(io::file_digest(path) != d1);
    std::filesystem::remove(path);
}
