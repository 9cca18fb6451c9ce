// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "oan/binary_io.hpp"
#include "oan/checkpoint.hpp"
#include "oan/config.hpp"
#include "oan/dataset.hpp"
#include "oan/errors.hpp"
#include "oan/experiments.hpp"
#include "oan/logging.hpp"
#include "oan/trainer.hpp"

namespace oan::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

// Resolved settings of one invocation: defaults, then the --config file,
// then flags given on the command line.
struct Context {
    TrainConfig train;
    SyntheticSpec data;
    bool data_seed_explicit = false;
    std::string config_path;
    std::string out_dir = "oan_out";
    std::optional<std::uint64_t> seed;
    std::vector<std::function<void()>> overlays;
};

template <typename T>
void overlay(CLI::App* app, Context& ctx, const std::string& name, T* target, const std::string& help,
             const std::function<void()>& on_set = {}) {
    auto storage = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *storage, help);
    if constexpr (std::is_same_v<T, std::vector<double>> || std::is_same_v<T, std::vector<std::size_t>>) {
        opt->delimiter(',');
    }
    ctx.overlays.push_back([opt, storage, target, on_set] {
        if (opt->count() == 0) return;
        *target = *storage;
        if (on_set) on_set();
    });
}

void add_common(CLI::App* app, Context& ctx) {
    app->add_option("--config", ctx.config_path, "JSON config file with optional \"train\" and \"data\" objects");
    app->add_option("--out", ctx.out_dir, "output directory")->capture_default_str();
    auto seed = std::make_shared<std::uint64_t>();
    CLI::Option* opt = app->add_option("--seed", *seed, "run seed (also the data seed unless set separately)");
    ctx.overlays.push_back([opt, seed, &ctx] {
        if (opt->count() > 0) ctx.seed = *seed;
    });
}

void add_data_flags(CLI::App* app, Context& ctx) {
    overlay(app, ctx, "--classes", &ctx.data.num_classes, "number of synthetic classes");
    overlay(app, ctx, "--per-class", &ctx.data.per_class_per_modality, "instances per class and modality");
    overlay(app, ctx, "--d-in", &ctx.data.d_in, "feature width");
    overlay(app, ctx, "--modality-shift", &ctx.data.modality_shift, "scale of the global modality offset");
    overlay(app, ctx, "--noise", &ctx.data.noise_std, "instance noise standard deviation");
    overlay(app, ctx, "--data-seed", &ctx.data.seed, "synthetic data seed", [&ctx] { ctx.data_seed_explicit = true; });
}

void add_train_flags(CLI::App* app, Context& ctx) {
    auto& t = ctx.train;
    overlay(app, ctx, "--epochs", &t.epochs, "training epochs");
    overlay(app, ctx, "--batch-size", &t.batch_size, "mini-batch size (>= 2)");
    overlay(app, ctx, "--lr", &t.learning_rate, "SGD learning rate");
    auto weights = std::make_shared<std::vector<double>>();
    CLI::Option* wopt = app->add_option("--weights", *weights, "lambda1,lambda2,lambda3")->delimiter(',')->expected(3);
    ctx.overlays.push_back([wopt, weights, &t] {
        if (wopt->count() == 0) return;
        t.loss_weights = {(*weights)[0], (*weights)[1], (*weights)[2]};
    });
    overlay(app, ctx, "--enable-in", &t.enable_in, "inter-class loss on/off");
    overlay(app, ctx, "--enable-s-hcr", &t.enable_s_hcr, "self-distillation consistency on/off");
    overlay(app, ctx, "--enable-t-hcr", &t.enable_t_hcr, "teacher-student consistency on/off");
    overlay(app, ctx, "--beta", &t.beta, "inter-class logit temperature");
    overlay(app, ctx, "--eta", &t.eta, "label smoothing");
    overlay(app, ctx, "--w", &t.w, "key momentum");
    overlay(app, ctx, "--tau", &t.tau, "teacher temperature");
    overlay(app, ctx, "--kernel-mu", &t.kernel_mu, "similarity kernel mean");
    overlay(app, ctx, "--kernel-sigma-sq", &t.kernel_sigma_sq, "similarity kernel variance");
    overlay(app, ctx, "--literal-coefficients", &t.literal_coefficients,
            "inter-class targets xi = -1/N - eta and eta/N instead of label smoothing");
    overlay(app, ctx, "--hidden", &t.hidden, "hidden width");
    overlay(app, ctx, "--embed", &t.embed, "embedding width");
    overlay(app, ctx, "--semantic-dim", &t.semantic_dim, "semantic logit width M");
    overlay(app, ctx, "--teacher-epochs", &t.teacher_epochs, "teacher pre-training epochs");
    overlay(app, ctx, "--num-unseen", &t.num_unseen, "held-out classes");
    overlay(app, ctx, "--ks", &t.ks, "Prec@K cutoffs, comma separated");
}

void resolve(Context& ctx) {
    if (!ctx.config_path.empty()) {
        std::ifstream in(ctx.config_path);
        if (!in) throw IoError("cannot open config file " + ctx.config_path);
        Json j;
        try {
            j = Json::parse(in);
        } catch (const Json::exception& e) {
            throw ConfigError("config file " + ctx.config_path + " is not valid JSON: " + e.what());
        }
        if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (key == "train") {
                merge_json(ctx.train, value);
            } else if (key == "data") {
                merge_json(ctx.data, value);
                if (value.contains("seed")) ctx.data_seed_explicit = true;
            } else {
                throw ConfigError("unknown config section '" + key + "'");
            }
        }
    }
    for (const auto& apply : ctx.overlays) apply();
    if (ctx.seed) ctx.train.seed = *ctx.seed;
    if (!ctx.data_seed_explicit) ctx.data.seed = ctx.train.seed;
}

void print_config(std::ostream& out, const std::string& command, const Context& ctx, bool with_train) {
    Json j{{"command", command}, {"data", ctx.data}, {"out", ctx.out_dir}};
    if (with_train) j["train"] = ctx.train;
    out << "resolved config: " << j.dump() << "\n";
}

fs::path prepare_out(const Context& ctx) {
    fs::path dir(ctx.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    io::write_file(path, std::vector<char>(text.begin(), text.end()));
}

std::vector<std::uint64_t> resolve_seeds(const Context& ctx, const std::vector<std::uint64_t>& given) {
    if (!given.empty()) return given;
    std::vector<std::uint64_t> seeds(5);
    std::iota(seeds.begin(), seeds.end(), ctx.train.seed);
    return seeds;
}

void print_report(std::ostream& out, const ZeroShotReport& rep) {
    for (const auto* r : {&rep.real, &rep.binary}) {
        out << fmt::format("{:<6} mAP@all {:.4f}", retrieval::to_string(r->mode), r->map_all);
        for (const auto& [k, v] : r->prec_at) out << fmt::format("  Prec@{} {:.4f}", k, v);
        out << fmt::format("  ({} queries)\n", r->num_queries());
    }
}

void write_reports(const fs::path& dir, const ZeroShotReport& rep) {
    write_text(dir / "report_real.json", retrieval::to_json(rep.real).dump(2) + "\n");
    write_text(dir / "report_binary.json", retrieval::to_json(rep.binary).dump(2) + "\n");
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    init_logging();
    CLI::App app{"Ontology-aware zero-shot cross-modal retrieval at desk scale"};
    app.require_subcommand(1);

    Context ctx;
    std::function<int()> action;

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic cross-modal dataset");
    add_common(gen, ctx);
    add_data_flags(gen, ctx);
    gen->callback([&] {
        action = [&]() -> int {
            resolve(ctx);
            print_config(out, "gen-data", ctx, false);
            const CrossModalDataset ds = generate_synthetic(ctx.data);
            const fs::path path = prepare_out(ctx) / "dataset.oands";
            save_dataset(ds, path);
            std::size_t sketches = 0;
            for (const auto& inst : ds.instances) sketches += inst.modality == Modality::Sketch;
            out << fmt::format("wrote {}: {} instances ({} sketches, {} images), {} classes, d_in {}, digest {}\n",
                               path.string(), ds.instances.size(), sketches, ds.instances.size() - sketches,
                               ds.num_classes, ds.d_in, io::file_digest(path));
            return 0;
        };
    });

    std::string data_path;
    auto* train = app.add_subcommand("train", "train a model and evaluate zero-shot retrieval");
    add_common(train, ctx);
    add_data_flags(train, ctx);
    add_train_flags(train, ctx);
    train->add_option("--data", data_path, "dataset file (default: generate the synthetic benchmark)");
    train->callback([&] {
        action = [&]() -> int {
            resolve(ctx);
            const CrossModalDataset ds = data_path.empty() ? generate_synthetic(ctx.data) : load_dataset(data_path);
            if (ctx.train.d_in == 0) ctx.train.d_in = ds.d_in;
            ctx.train.validate();
            print_config(out, "train", ctx, true);
            const TrainResult result = run_training(ctx.train, ds);
            const fs::path dir = prepare_out(ctx);
            save_checkpoint(result.state, dir / "checkpoint.oanck");
            std::string log;
            for (const auto& m : result.state.history) log += to_json(m).dump() + "\n";
            write_text(dir / "metrics.jsonl", log);
            write_text(dir / "config.json", Json(result.state.config).dump(2) + "\n");
            write_reports(dir, result.report);
            print_report(out, result.report);
            out << "checkpoint digest " << io::file_digest(dir / "checkpoint.oanck") << "\n";
            return 0;
        };
    });

    std::string checkpoint_path;
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on its unseen classes");
    add_common(eval, ctx);
    add_data_flags(eval, ctx);
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    eval->add_option("--data", data_path, "dataset file (default: regenerate the synthetic benchmark)");
    eval->callback([&] {
        action = [&]() -> int {
            const TrainState state = load_checkpoint(checkpoint_path);
            ctx.train = state.config;
            resolve(ctx);
            print_config(out, "eval", ctx, true);
            const CrossModalDataset ds = data_path.empty() ? generate_synthetic(ctx.data) : load_dataset(data_path);
            const ZeroShotReport rep = evaluate_zero_shot(state.model, ds, state.split, state.config.ks);
            write_reports(prepare_out(ctx), rep);
            print_report(out, rep);
            return 0;
        };
    });

    std::vector<std::uint64_t> seeds;
    auto* ablate = app.add_subcommand("ablate", "run the six-row loss ablation grid over several seeds");
    add_common(ablate, ctx);
    add_data_flags(ablate, ctx);
    add_train_flags(ablate, ctx);
    ablate->add_option("--seeds", seeds, "seeds (default: five consecutive seeds from --seed)")->delimiter(',');
    ablate->callback([&] {
        action = [&]() -> int {
            resolve(ctx);
            ctx.train.validate();
            print_config(out, "ablate", ctx, true);
            const auto s = resolve_seeds(ctx, seeds);
            const auto rows = experiments::run_ablation(ctx.train, ctx.data, s);
            const fs::path dir = prepare_out(ctx);
            const std::string table = experiments::ablation_table(rows, ctx.train.ks);
            write_text(dir / "ablation.json", experiments::ablation_json(rows, s, ctx.train.ks).dump(2) + "\n");
            write_text(dir / "ablation.txt", table);
            out << table;
            return 0;
        };
    });

    auto* sweep = app.add_subcommand("sweep", "grid over lambda2 x lambda3");
    add_common(sweep, ctx);
    add_data_flags(sweep, ctx);
    add_train_flags(sweep, ctx);
    sweep->add_option("--seeds", seeds, "seeds (default: five consecutive seeds from --seed)")->delimiter(',');
    sweep->callback([&] {
        action = [&]() -> int {
            resolve(ctx);
            ctx.train.validate();
            print_config(out, "sweep", ctx, true);
            const auto s = resolve_seeds(ctx, seeds);
            const auto cells = experiments::run_sweep(ctx.train, ctx.data, s);
            const fs::path dir = prepare_out(ctx);
            const std::string csv = experiments::sweep_csv(cells, ctx.train.ks);
            write_text(dir / "sweep.json", experiments::sweep_json(cells, s, ctx.train.ks).dump(2) + "\n");
            write_text(dir / "sweep.csv", csv);
            out << csv;
            return 0;
        };
    });

    std::size_t instances = 20;
    double tolerance = 1e-4;
    double step = 1e-5;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every loss and the full objective");
    add_common(gradcheck, ctx);
    gradcheck->add_option("--instances", instances, "random instances per check")->capture_default_str();
    gradcheck->add_option("--tolerance", tolerance, "maximum relative error")->capture_default_str();
    gradcheck->add_option("--step", step, "central-difference step")->capture_default_str();
    gradcheck->callback([&] {
        action = [&]() -> int {
            resolve(ctx);
            out << "resolved config: "
                << Json{{"command", "gradcheck"}, {"seed", ctx.train.seed}, {"instances", instances},
                        {"tolerance", tolerance}, {"step", step}, {"out", ctx.out_dir}}
                       .dump()
                << "\n";
            const auto entries = experiments::run_gradcheck_suite(instances, ctx.train.seed, step, tolerance);
            Json report = Json::array();
            bool ok = true;
            for (const auto& e : entries) {
                out << fmt::format("{} {:<8} max_rel_err {:.3e} over {} instances\n", e.passed ? "PASS" : "FAIL",
                                   e.name, e.max_rel_error, e.instances);
                report.push_back({{"name", e.name}, {"instances", e.instances}, {"max_rel_error", e.max_rel_error},
                                  {"tolerance", tolerance}, {"passed", e.passed}});
                ok = ok && e.passed;
            }
            write_text(prepare_out(ctx) / "gradcheck.json", report.dump(2) + "\n");
            if (!ok) err << "gradient check failed\n";
            return ok ? 0 : 1;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }
    try {
        return action ? action() : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace oan::cli
