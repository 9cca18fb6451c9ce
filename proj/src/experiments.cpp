// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "oan/diffcore/grad_check.hpp"
#include "oan/diffcore/ops.hpp"
#include "oan/losses.hpp"

namespace oan::experiments {

std::vector<AblationCell> ablation_grid() {
    return {
        {"baseline", false, false, false},
        {"baseline+S_hcr", false, false, true},
        {"baseline+in", true, false, false},
        {"baseline+in+T_hcr", true, true, false},
        {"baseline+in+S_hcr", true, false, true},
        {"baseline+in+T_hcr+S_hcr", true, true, true},
    };
}

std::vector<double> CellResult::map_all(retrieval::Mode mode) const {
    std::vector<double> out;
    for (const auto& r : runs) out.push_back(mode == retrieval::Mode::Real ? r.report.real.map_all : r.report.binary.map_all);
    return out;
}

std::vector<double> CellResult::prec_at(std::size_t k, retrieval::Mode mode) const {
    std::vector<double> out;
    for (const auto& r : runs) {
        const auto& rep = mode == retrieval::Mode::Real ? r.report.real : r.report.binary;
        out.push_back(rep.prec_at.at(k));
    }
    return out;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

CellResult run_seeds(const TrainConfig& cfg, const SyntheticSpec& data, std::span<const std::uint64_t> seeds) {
    CellResult out;
    for (std::uint64_t seed : seeds) {
        SyntheticSpec spec = data;
        spec.seed = seed;
        TrainConfig c = cfg;
        c.seed = seed;
        const CrossModalDataset ds = generate_synthetic(spec);
        out.runs.push_back(SeedRun{seed, run_training(c, ds).report});
    }
    return out;
}

std::vector<AblationRow> run_ablation(const TrainConfig& base, const SyntheticSpec& data,
                                      std::span<const std::uint64_t> seeds) {
    std::vector<AblationRow> rows;
    for (const auto& cell : ablation_grid()) {
        TrainConfig cfg = base;
        cfg.enable_in = cell.enable_in;
        cfg.enable_t_hcr = cell.enable_t_hcr;
        cfg.enable_s_hcr = cell.enable_s_hcr;
        spdlog::info("ablation cell {}", cell.name);
        rows.push_back(AblationRow{cell, run_seeds(cfg, data, seeds)});
    }
    return rows;
}

namespace {

nlohmann::json summary_json(std::span<const double> values) {
    const Summary s = summarize(values);
    return nlohmann::json{{"mean", s.mean}, {"std", s.std}, {"per_seed", std::vector<double>(values.begin(), values.end())}};
}

} // namespace

nlohmann::json ablation_json(const std::vector<AblationRow>& rows, std::span<const std::uint64_t> seeds,
                             std::span<const std::size_t> ks) {
    nlohmann::json out;
    out["seeds"] = std::vector<std::uint64_t>(seeds.begin(), seeds.end());
    out["ks"] = std::vector<std::size_t>(ks.begin(), ks.end());
    out["rows"] = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json prec = nlohmann::json::object();
        for (std::size_t k : ks) prec[std::to_string(k)] = summary_json(row.result.prec_at(k));
        out["rows"].push_back({{"name", row.cell.name},
                               {"in", row.cell.enable_in},
                               {"t_hcr", row.cell.enable_t_hcr},
                               {"s_hcr", row.cell.enable_s_hcr},
                               {"map_all", summary_json(row.result.map_all())},
                               {"prec", prec},
                               {"map_all_binary", summary_json(row.result.map_all(retrieval::Mode::Binary))}});
    }
    return out;
}

std::string ablation_table(const std::vector<AblationRow>& rows, std::span<const std::size_t> ks) {
    auto mark = [](bool b) { return b ? "x" : "-"; };
    std::ostringstream os;
    os << fmt::format("{:<26} {:>3} {:>6} {:>6}", "config", "in", "T_hcr", "S_hcr");
    for (std::size_t k : ks) os << fmt::format(" {:>17}", fmt::format("Prec@{}", k));
    os << fmt::format(" {:>17}\n", "mAP@all");
    for (const auto& row : rows) {
        os << fmt::format("{:<26} {:>3} {:>6} {:>6}", row.cell.name, mark(row.cell.enable_in),
                          mark(row.cell.enable_t_hcr), mark(row.cell.enable_s_hcr));
        for (std::size_t k : ks) {
            const auto p = row.result.prec_at(k);
            const Summary s = summarize(p);
            os << fmt::format(" {:>17}", fmt::format("{:.4f}+-{:.4f}", s.mean, s.std));
        }
        const auto m = row.result.map_all();
        const Summary s = summarize(m);
        os << fmt::format(" {:>17}\n", fmt::format("{:.4f}+-{:.4f}", s.mean, s.std));
    }
    return os.str();
}

std::vector<SweepCell> run_sweep(const TrainConfig& base, const SyntheticSpec& data,
                                 std::span<const std::uint64_t> seeds) {
    std::vector<SweepCell> cells;
    for (double l2 : kSweepLambda2) {
        for (double l3 : kSweepLambda3) {
            TrainConfig cfg = base;
            cfg.loss_weights.lambda2 = l2;
            cfg.loss_weights.lambda3 = l3;
            spdlog::info("sweep cell lambda2={} lambda3={}", l2, l3);
            cells.push_back(SweepCell{l2, l3, run_seeds(cfg, data, seeds)});
        }
    }
    return cells;
}

nlohmann::json sweep_json(const std::vector<SweepCell>& cells, std::span<const std::uint64_t> seeds,
                          std::span<const std::size_t> ks) {
    nlohmann::json out;
    out["seeds"] = std::vector<std::uint64_t>(seeds.begin(), seeds.end());
    out["lambda2"] = kSweepLambda2;
    out["lambda3"] = kSweepLambda3;
    nlohmann::json matrix = nlohmann::json::array();
    for (double l2 : kSweepLambda2) {
        nlohmann::json row = nlohmann::json::array();
        for (double l3 : kSweepLambda3) {
            auto it = std::find_if(cells.begin(), cells.end(),
                                   [&](const SweepCell& c) { return c.lambda2 == l2 && c.lambda3 == l3; });
            row.push_back(it == cells.end() ? nlohmann::json(nullptr)
                                            : nlohmann::json(summarize(it->result.map_all()).mean));
        }
        matrix.push_back(row);
    }
    out["map_all"] = matrix;
    out["cells"] = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json prec = nlohmann::json::object();
        for (std::size_t k : ks) prec[std::to_string(k)] = summarize(c.result.prec_at(k)).mean;
        out["cells"].push_back({{"lambda2", c.lambda2},
                                {"lambda3", c.lambda3},
                                {"map_all", summary_json(c.result.map_all())},
                                {"prec", prec}});
    }
    return out;
}

std::string sweep_csv(const std::vector<SweepCell>& cells, std::span<const std::size_t> ks) {
    std::ostringstream os;
    os << "lambda2,lambda3,map_all,prec\n";
    for (const auto& c : cells) {
        const double prec = ks.empty() ? 0.0 : summarize(c.result.prec_at(ks.front())).mean;
        os << fmt::format("{},{},{:.17g},{:.17g}\n", c.lambda2, c.lambda3, summarize(c.result.map_all()).mean, prec);
    }
    return os.str();
}

namespace {

using diff::Tape;
using diff::Tensor;

Tensor random_tensor(std::size_t r, std::size_t c, double stddev, std::mt19937_64& rng, bool requires_grad) {
    std::normal_distribution<double> g(0.0, stddev);
    std::vector<double> data(r * c);
    for (double& x : data) x = g(rng);
    return Tensor(r, c, std::move(data), requires_grad);
}

std::vector<std::size_t> random_labels(std::size_t n, std::size_t classes, std::mt19937_64& rng) {
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i % classes;  // every class present
    std::shuffle(labels.begin(), labels.end(), rng);
    return labels;
}

Tensor softmax_rows(const Tensor& logits) {
    Tape t;
    return diff::exp(t, diff::log_softmax_rows(t, logits.detach()));
}

bool clear_of_kinks(const std::vector<NamedParameter>& params, const BatchInputs& batch, double margin) {
    std::map<std::string, Tensor> p;
    for (const auto& [name, t] : params) p.emplace(name, t);
    const Tensor& emb = p.at("encoder.modality_embedding");
    const Tensor& w = p.at("encoder.hidden.weight");
    const Tensor& b = p.at("encoder.hidden.bias");
    for (std::size_t i = 0; i < batch.features.rows(); ++i) {
        const std::size_t m = static_cast<std::size_t>(batch.modality[i]);
        bool any_active = false;
        for (std::size_t j = 0; j < w.cols(); ++j) {
            double pre = b(0, j);
            for (std::size_t k = 0; k < w.rows(); ++k) pre += (batch.features(i, k) + emb(m, k)) * w(k, j);
            if (std::abs(pre) < margin) return false;
            any_active = any_active || pre > 0.0;
        }
        if (!any_active) return false;
    }
    return true;
}

// Builds one seeded check: returns the function and its inputs.
using CaseBuilder = std::function<std::pair<diff::ScalarFn, std::vector<Tensor>>(std::mt19937_64&)>;

std::vector<std::pair<std::string, CaseBuilder>> gradcheck_cases() {
    std::vector<std::pair<std::string, CaseBuilder>> cases;

    cases.emplace_back("L_in", [](std::mt19937_64& rng) {
        Tensor values = random_tensor(6, 4, 0.5, rng, true);
        const auto labels = random_labels(6, 3, rng);
        const auto cats = losses::batch_categories(labels);
        Tape t;
        const Tensor keys = diff::l2_normalize_rows(t, random_tensor(cats.classes.size(), 4, 1.0, rng, false));
        diff::ScalarFn fn = [keys, targets = cats.targets](Tape& tape, std::span<const Tensor> in) {
            return losses::inter_class_loss(tape, in[0], targets, keys, losses::InterClassLossConfig{});
        };
        return std::make_pair(fn, std::vector<Tensor>{values});
    });

    cases.emplace_back("L_S_hcr", [](std::mt19937_64& rng) {
        const Tensor cls_out = random_tensor(5, 4, 0.3, rng, false);
        Tensor logits = random_tensor(5, 4, 0.3, rng, true);
        diff::ScalarFn fn = [cls_out](Tape& tape, std::span<const Tensor> in) {
            return losses::self_distill_hcr(tape, cls_out, in[0], losses::HypersphereKernel{});
        };
        return std::make_pair(fn, std::vector<Tensor>{logits});
    });

    cases.emplace_back("L_T_hcr", [](std::mt19937_64& rng) {
        Tensor cls_out = random_tensor(5, 4, 0.3, rng, true);
        const Tensor teacher = random_tensor(5, 4, 0.3, rng, false);
        diff::ScalarFn fn = [teacher](Tape& tape, std::span<const Tensor> in) {
            return losses::teacher_student_hcr(tape, in[0], teacher, losses::HypersphereKernel{});
        };
        return std::make_pair(fn, std::vector<Tensor>{cls_out});
    });

    cases.emplace_back("L_cls", [](std::mt19937_64& rng) {
        Tensor logits = random_tensor(6, 5, 1.0, rng, true);
        const auto labels = random_labels(6, 5, rng);
        diff::ScalarFn fn = [labels](Tape& tape, std::span<const Tensor> in) {
            return losses::classification_loss(tape, in[0], labels);
        };
        return std::make_pair(fn, std::vector<Tensor>{logits});
    });

    cases.emplace_back("L_se", [](std::mt19937_64& rng) {
        Tensor logits = random_tensor(6, 8, 1.0, rng, true);
        const Tensor teacher = softmax_rows(random_tensor(6, 8, 1.0, rng, false));
        diff::ScalarFn fn = [teacher](Tape& tape, std::span<const Tensor> in) {
            return losses::semantic_loss(tape, in[0], teacher);
        };
        return std::make_pair(fn, std::vector<Tensor>{logits});
    });

    cases.emplace_back("L_total", [](std::mt19937_64& rng) {
        TrainConfig cfg;
        cfg.enable_in = cfg.enable_s_hcr = cfg.enable_t_hcr = true;
        cfg.d_in = 6;
        cfg.hidden = 8;
        cfg.embed = 5;
        cfg.semantic_dim = 4;
        const ModelDims dims = cfg.dims(3);
        BatchInputs batch;
        for (std::size_t i = 0; i < 6; ++i) batch.modality.push_back(i % 2 ? Modality::Image : Modality::Sketch);
        std::shared_ptr<OanModel> model;
        std::uint64_t s = 0;
        // Finite differences are meaningless across a ReLU kink, and a row
        // with every hidden unit off has a zero embedding. Redraw until the
        // sample sits well inside one linear piece.
        do {
            s = rng();
            model = std::make_shared<OanModel>(init_model(dims, s));
            batch.features = random_tensor(6, dims.d_in, 1.0, rng, false);
        } while (!clear_of_kinks(model->named_parameters(), batch, 1e-3));
        std::shared_ptr<TeacherModel> teacher;
        do {
            teacher = std::make_shared<TeacherModel>(init_teacher(dims, cfg.tau, rng()));
        } while (!clear_of_kinks(teacher->named_parameters(), batch, 1e-3));
        teacher->freeze();
        auto dictionary = std::make_shared<OntologyDictionary>(init_dictionary(3, dims.embed, cfg.w, s + 2));
        batch.labels = random_labels(6, 3, rng);

        std::vector<Tensor> params;
        for (const auto& [name, p] : model->named_parameters()) params.push_back(p);
        // The self-distillation target is detached in training, so the check
        // holds it at its value for the unperturbed parameters.
        Tape scratch;
        const Tensor target = model->heads(scratch, model->embed(scratch, batch.features, batch.modality))
                                  .class_logits.detach();
        diff::ScalarFn fn = [model, teacher, dictionary, batch, cfg, target](Tape& tape, std::span<const Tensor>) {
            return evaluate_batch(tape, *model, *teacher, *dictionary, batch, cfg, &target).total;
        };
        return std::make_pair(fn, params);
    });
    return cases;
}

} // namespace

std::vector<GradCheckEntry> run_gradcheck_suite(std::size_t instances, std::uint64_t seed, double step,
                                                double tolerance) {
    std::vector<GradCheckEntry> out;
    std::uint64_t stream = 0;
    for (const auto& [name, build] : gradcheck_cases()) {
        GradCheckEntry entry{name, instances, 0.0, true};
        for (std::size_t i = 0; i < instances; ++i) {
            std::mt19937_64 rng(derive_seed(derive_seed(seed, stream), i));
            auto [fn, inputs] = build(rng);
            const auto report = diff::grad_check(fn, inputs, step, tolerance);
            entry.max_rel_error = std::max(entry.max_rel_error, report.max_rel_error);
            entry.passed = entry.passed && report.passed;
            if (!report.passed) {
                spdlog::warn("{} instance {}: input {} entry {} analytic {:.10g} numeric {:.10g}", name, i,
                             report.worst_input, report.worst_entry, report.worst_analytic, report.worst_numeric);
            }
        }
        ++stream;
        out.push_back(entry);
    }
    return out;
}

} // namespace oan::experiments
