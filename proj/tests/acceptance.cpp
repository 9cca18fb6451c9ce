// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "oan/binary_io.hpp"
#include "oan/checkpoint.hpp"
#include "oan/cli.hpp"
#include "oan/dataset.hpp"
#include "oan/experiments.hpp"
#include "oan/losses.hpp"
#include "oan/ontology_memory.hpp"
#include "oan/retrieval_eval.hpp"
#include "oan/trainer.hpp"
#include "retrieval_oracle.hpp"
#include "test_util.hpp"

using namespace oan;
using diff::Tensor;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Verdict gradient_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto entries = experiments::run_gradcheck_suite(20, 1, 1e-5, 1e-4);
    const double secs = seconds_since(t0);
    bool ok = entries.size() == 6 && secs < 60.0;
    std::string d;
    for (const auto& e : entries) {
        ok = ok && e.passed && e.instances >= 20;
        d += fmt::format("{}={:.2e} ", e.name, e.max_rel_error);
    }
    return {ok, d + fmt::format("({} terms x 20 instances, {:.1f}s)", entries.size(), secs)};
}

Verdict memory_invariant() {
    const std::size_t classes = 12, dim = 16;
    OntologyDictionary dict = init_dictionary(classes, dim, 0.01, 7);
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> size_dist(1, 24), class_dist(0, classes - 1);
    std::uniform_real_distribution<double> w_dist(0.0, 1.0);
    double worst = 0.0;
    std::size_t untouched_checked = 0, untouched_changed = 0;
    for (int step = 0; step < 1000; ++step) {
        // Rotate the momentum through [0, 1] by rebuilding around the current keys.
        dict = OntologyDictionary(dict.keys().clone(), w_dist(rng));
        const std::size_t n = size_dist(rng);
        // Restrict each batch to a random subset of classes so some are absent.
        const std::size_t active = 1 + class_dist(rng) % 4;
        std::vector<std::size_t> pool(classes);
        for (std::size_t c = 0; c < classes; ++c) pool[c] = c;
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(active);
        std::vector<std::size_t> labels(n);
        for (auto& l : labels) l = pool[class_dist(rng) % active];
        const Tensor before = dict.keys().clone();
        dict.update(BatchValues{test::random_tensor(n, dim, rng(), false, 2.0), labels,
                                std::vector<Modality>(n, Modality::Sketch)});
        for (std::size_t c = 0; c < classes; ++c) {
            worst = std::max(worst, std::abs(test::row_norm(dict.keys(), c) - 1.0));
            if (std::find(labels.begin(), labels.end(), c) != labels.end()) continue;
            ++untouched_checked;
            for (std::size_t k = 0; k < dim; ++k) {
                if (std::bit_cast<std::uint64_t>(before(c, k)) != std::bit_cast<std::uint64_t>(dict.keys()(c, k))) {
                    ++untouched_changed;
                    break;
                }
            }
        }
    }
    return {worst <= 1e-9 && untouched_changed == 0,
            fmt::format("max | ||K_c|| - 1 | = {:.2e}; {} of {} untouched rows changed", worst, untouched_changed,
                        untouched_checked)};
}

Verdict kernel_identities() {
    const losses::HypersphereKernel k;
    const bool peak = k(0.0) == 1.0;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(0.0, 4.0);
    std::vector<double> ds(1000);
    for (double& d : ds) d = dist(rng);
    diff::Tape tape;
    const Tensor sim = losses::hypersphere_similarity(tape, Tensor(1, ds.size(), ds), k);
    double worst = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double direct = std::exp(-ds[i] * ds[i]);
        worst = std::max({worst, std::abs(k(ds[i]) - direct), std::abs(sim(0, i) - direct)});
    }
    return {peak && worst <= 1e-12, fmt::format("D(0) = {:.17g}; max |D(d) - exp(-d^2)| = {:.2e} over 1000 d",
                                                k(0.0), worst)};
}

Verdict metric_oracle() {
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const std::size_t nq = 2 + rng() % 8, ng = 5 + rng() % 40, dim = 1 + rng() % 6, labels = 1 + rng() % 4;
        std::vector<std::size_t> ql(nq), gl(ng);
        for (auto& l : ql) l = rng() % labels;
        for (auto& l : gl) l = rng() % labels;
        // Coarse grid values force distance ties, which both sides break by index.
        Tensor q = test::random_tensor(nq, dim, rng()), g = test::random_tensor(ng, dim, rng());
        if (inst % 2 == 0) {
            for (double& x : q.mutable_data()) x = std::round(x * 2.0) / 2.0;
            for (double& x : g.mutable_data()) x = std::round(x * 2.0) / 2.0;
        }
        const std::vector<std::size_t> ks = {1, 3, 10, 100};
        for (const auto mode : {retrieval::Mode::Real, retrieval::Mode::Binary}) {
            const auto got = retrieval::evaluate_retrieval(q, ql, g, gl, ks, mode);
            const auto want = test::naive_retrieval(q, ql, g, gl, ks, mode == retrieval::Mode::Binary);
            worst = std::max(worst, std::abs(got.map_all - want.map_all));
            for (std::size_t k : ks) worst = std::max(worst, std::abs(got.prec_at.at(k) - want.prec_at.at(k)));
        }
    }
    const std::vector<std::uint8_t> rel = {1, 0, 1, 0};
    const double ap = retrieval::average_precision(rel);

    // Chance: features independent of labels, 20 seeds. The gallery is large
    // enough that the finite-gallery excess over 1/L is far below one SE.
    const std::size_t L = 5, per_class = 2000, queries = 10, dim = 16;
    std::vector<double> maps;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 r(1000 + seed);
        std::vector<std::size_t> gl(L * per_class), ql(queries);
        for (std::size_t i = 0; i < gl.size(); ++i) gl[i] = i % L;
        for (auto& l : ql) l = r() % L;
        const Tensor g = test::random_tensor(gl.size(), dim, r()), q = test::random_tensor(queries, dim, r());
        maps.push_back(retrieval::evaluate_retrieval(q, ql, g, gl, std::vector<std::size_t>{10}, retrieval::Mode::Real)
                           .map_all);
    }
    const auto s = experiments::summarize(maps);
    const double se = s.std / std::sqrt(static_cast<double>(maps.size()));
    const double chance = 1.0 / static_cast<double>(L);
    const double exact = test::chance_ap(L * per_class, per_class);
    const bool chance_ok = std::abs(s.mean - chance) <= 3.0 * se;
    return {worst <= 1e-12 && std::abs(ap - 5.0 / 6.0) <= 1e-9 && std::abs(ap - 0.83333) <= 1e-5 && chance_ok,
            fmt::format("oracle max diff {:.2e} over 50 instances; AP[1,0,1,0] = {:.12f}; chance mAP {:.5f} vs 1/L "
                        "{:.5f} (SE {:.5f}, exact finite-gallery {:.5f})",
                        worst, ap, s.mean, chance, se, exact)};
}

std::vector<experiments::AblationRow> g_rows;
double g_grid_seconds = 0.0;
const std::vector<std::uint64_t> kSeeds = {1, 2, 3, 4, 5};

const experiments::AblationRow& row(const std::string& name) {
    for (const auto& r : g_rows)
        if (r.cell.name == name) return r;
    throw std::runtime_error("no ablation row " + name);
}

Verdict trend() {
    const auto t0 = std::chrono::steady_clock::now();
    g_rows = experiments::run_ablation(TrainConfig{}, SyntheticSpec{}, kSeeds);
    g_grid_seconds = seconds_since(t0);

    const auto base = row("baseline").result.map_all();
    const auto in = row("baseline+in").result.map_all();
    const auto ins = row("baseline+in+S_hcr").result.map_all();
    auto gap = [](const std::vector<double>& lo, const std::vector<double>& hi, int& wins) {
        double g = 0.0;
        wins = 0;
        for (std::size_t i = 0; i < lo.size(); ++i) {
            g += hi[i] - lo[i];
            wins += hi[i] > lo[i] ? 1 : 0;
        }
        return g / static_cast<double>(lo.size());
    };
    int w1 = 0, w2 = 0;
    const double g1 = gap(base, in, w1), g2 = gap(in, ins, w2);
    double lowest = 1.0;
    for (const auto& r : g_rows)
        for (double m : r.result.map_all()) lowest = std::min(lowest, m);
    const bool ok = g1 > 0 && w1 >= 4 && g2 > 0 && w2 >= 4 && lowest >= 0.4 && g_grid_seconds < 600.0;
    const auto mean = [](const std::vector<double>& v) { return experiments::summarize(v).mean; };
    return {ok, fmt::format("mAP base {:.4f} < +in {:.4f} (gap {:+.4f}, {}/5 seeds) < +in+S_hcr {:.4f} (gap {:+.4f}, "
                            "{}/5 seeds); min run {:.4f}; grid {:.1f}s",
                            mean(base), mean(in), g1, w1, mean(ins), g2, w2, lowest, g_grid_seconds)};
}

Verdict binary_sanity() {
    // The default configuration is the +in+S_hcr cell.
    const auto& r = row("baseline+in+S_hcr").result;
    const double real = experiments::summarize(r.map_all(retrieval::Mode::Real)).mean;
    const double bin = experiments::summarize(r.map_all(retrieval::Mode::Binary)).mean;
    return {bin >= 0.8 * real, fmt::format("binary mAP {:.4f} vs real {:.4f} (ratio {:.3f}, 5 seeds)", bin, real,
                                           bin / real)};
}

int cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"oan_cli"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return oan::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

Verdict determinism() {
    const auto root = fs::temp_directory_path() / "oan_acceptance";
    fs::remove_all(root);
    std::vector<std::string> ckpt, metrics;
    for (const char* run : {"a", "b"}) {
        const auto dir = root / run;
        if (cli({"train", "--out", dir.string(), "--seed", "3"}) != 0) return {false, "train exited nonzero"};
        ckpt.push_back(io::file_digest(dir / "checkpoint.oanck"));
        metrics.push_back(io::file_digest(dir / "metrics.jsonl"));
    }
    fs::remove_all(root);
    return {ckpt[0] == ckpt[1] && metrics[0] == metrics[1],
            fmt::format("checkpoint {} / {}, metrics {} / {}", ckpt[0], ckpt[1], metrics[0], metrics[1])};
}

Verdict serialization() {
    SyntheticSpec spec;
    spec.seed = 9;
    const auto ds = generate_synthetic(spec);
    const auto ds_bytes = encode_dataset(ds);
    const bool ds_ok = encode_dataset(decode_dataset(ds_bytes)) == ds_bytes;

    TrainConfig cfg;
    cfg.seed = 9;
    const auto result = run_training(cfg, ds);
    const auto bytes = encode_checkpoint(result.state);
    const auto path = fs::temp_directory_path() / "oan_acceptance.oanck";
    save_checkpoint(result.state, path);
    const TrainState back = load_checkpoint(path);
    fs::remove(path);
    const bool ck_ok = encode_checkpoint(back) == bytes;

    std::vector<std::size_t> probe;
    for (std::size_t i = 0; i < ds.instances.size(); i += 17) probe.push_back(i);
    const Tensor x = gather_features(ds, probe);
    const auto m = gather_modality(ds, probe);
    diff::Tape t1, t2;
    const Tensor e1 = result.state.model.embed(t1, x, m), e2 = back.model.embed(t2, x, m);
    const auto h1 = result.state.model.heads(t1, e1), h2 = back.model.heads(t2, e2);
    const bool probe_ok = e1.bit_equal(e2) && h1.class_logits.bit_equal(h2.class_logits) &&
                          h1.logits.bit_equal(h2.logits) &&
                          result.state.teacher.distribution(x, m).bit_equal(back.teacher.distribution(x, m));
    return {ds_ok && ck_ok && probe_ok,
            fmt::format("dataset {} bytes {}, checkpoint {} bytes {}, {} probe rows {}", ds_bytes.size(),
                        ds_ok ? "identical" : "DIFFER", bytes.size(), ck_ok ? "identical" : "DIFFER", probe.size(),
                        probe_ok ? "0 ulp" : "DIFFER")};
}

} // namespace

int main() {
    // The CLI re-reads OAN_LOG on every run.
    ::setenv("OAN_LOG", "error", 1);
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"gradient-correctness", gradient_correctness},
        {"memory-invariant", memory_invariant},
        {"kernel-identities", kernel_identities},
        {"metric-oracle", metric_oracle},
        {"ablation-trend", trend},
        {"binary-sanity", binary_sanity},
        {"determinism", determinism},
        {"serialization", serialization},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
