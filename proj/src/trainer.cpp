// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <spdlog/spdlog.h>

#include "oan/diffcore/ops.hpp"
#include "oan/errors.hpp"
#include "oan/losses.hpp"

namespace oan {

nlohmann::json to_json(const EpochMetrics& m) {
    return nlohmann::json{{"epoch", m.epoch}, {"total", m.total}, {"cls", m.cls},         {"se", m.se},
                          {"in", m.in},       {"s_hcr", m.s_hcr}, {"t_hcr", m.t_hcr},     {"lr", m.lr},
                          {"batches", m.batches}, {"dropped", m.dropped}};
}

BatchInputs make_batch(const CrossModalDataset& ds, const SeenUnseenSplit& split, std::span<const std::size_t> indices) {
    BatchInputs batch;
    batch.features = gather_features(ds, indices);
    batch.modality = gather_modality(ds, indices);
    batch.labels.reserve(indices.size());
    for (std::size_t c : gather_labels(ds, indices)) {
        if (!split.is_seen(c)) throw LabelError("zero-shot violation: unseen class " + std::to_string(c) + " in a training batch");
        batch.labels.push_back(split.seen_index(c));
    }
    return batch;
}

BatchObjective evaluate_batch(Tape& tape, const OanModel& model, const TeacherModel& teacher,
                              const OntologyDictionary& dictionary, const BatchInputs& batch, const TrainConfig& cfg,
                              const Tensor* self_target) {
    const Tensor emb = model.embed(tape, batch.features, batch.modality);
    const auto heads = model.heads(tape, emb);
    const auto kernel = cfg.kernel();

    BatchObjective obj;
    obj.cls = losses::classification_loss(tape, heads.class_logits, batch.labels);
    obj.se = losses::semantic_loss(tape, heads.logits, teacher.distribution(batch.features, batch.modality));
    obj.values = diff::l2_normalize_rows(tape, emb);

    obj.in = Tensor::scalar(0.0);
    if (cfg.enable_in) {
        const auto cats = losses::batch_categories(batch.labels);
        obj.in = losses::inter_class_loss(tape, obj.values, cats.targets, dictionary.lookup(cats.classes),
                                          cfg.inter_class());
    }
    obj.s_hcr = Tensor::scalar(0.0);
    if (cfg.enable_s_hcr) {
        // Both sides live on the unit sphere: the target is the student's own
        // class posterior, the prediction the projected semantic logits.
        const Tensor target = (self_target ? *self_target : heads.class_logits).detach();
        const Tensor posterior = diff::exp(tape, diff::log_softmax_rows(tape, target));
        obj.s_hcr = losses::self_distill_hcr(tape, posterior, diff::l2_normalize_rows(tape, heads.logits), kernel);
    }
    obj.t_hcr = Tensor::scalar(0.0);
    if (cfg.enable_t_hcr) {
        Tape scratch;
        const Tensor teacher_logits = teacher.logits(scratch, batch.features, batch.modality).detach();
        obj.t_hcr = losses::teacher_student_hcr(tape, diff::l2_normalize_rows(tape, heads.class_logits),
                                                diff::l2_normalize_rows(scratch, teacher_logits), kernel);
    }
    const Tensor hcr = diff::add(tape, obj.s_hcr, obj.t_hcr);
    obj.total = losses::total_loss(tape, obj.cls, obj.se, obj.in, hcr, cfg.loss_weights);
    return obj;
}

void sgd_step(std::span<const NamedParameter> params, double lr) {
    for (const auto& [name, p] : params) {
        if (!p.has_grad()) continue;
        for (double g : p.grad()) {
            if (!std::isfinite(g)) throw NumericError("non-finite gradient for parameter " + name);
        }
    }
    for (const auto& [name, p] : params) {
        if (!p.has_grad()) continue;
        Tensor t = p;
        auto g = t.grad();
        auto x = t.mutable_data();
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= lr * g[i];
    }
}

std::vector<std::vector<std::size_t>> epoch_batches(const CrossModalDataset& ds, const SeenUnseenSplit& split,
                                                    const TrainConfig& cfg, std::size_t epoch) {
    std::vector<std::size_t> order = training_indices(ds, split);
    std::mt19937_64 rng(derive_seed(derive_seed(cfg.seed, seed_stream::kShuffle), epoch));
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        if (end - start < 2) {
            spdlog::debug("epoch {}: dropping single-instance remainder batch", epoch);
            continue;
        }
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

EpochMetrics train_epoch(TrainState& state, const CrossModalDataset& ds) {
    const TrainConfig& cfg = state.config;
    const std::size_t epoch = state.epoch + 1;
    const auto batches = epoch_batches(ds, state.split, cfg, epoch);
    const auto params = state.model.named_parameters();

    EpochMetrics m;
    m.epoch = epoch;
    m.lr = cfg.learning_rate;
    std::size_t used = 0;
    for (const auto& indices : batches) {
        const BatchInputs batch = make_batch(ds, state.split, indices);
        Tape tape;
        const BatchObjective obj = evaluate_batch(tape, state.model, state.teacher, state.dictionary, batch, cfg);
        tape.backward(obj.total);
        sgd_step(params, cfg.learning_rate);
        state.dictionary.update(BatchValues{obj.values.detach(), batch.labels, batch.modality});

        m.total += obj.total.item();
        m.cls += obj.cls.item();
        m.se += obj.se.item();
        m.in += obj.in.item();
        m.s_hcr += obj.s_hcr.item();
        m.t_hcr += obj.t_hcr.item();
        used += indices.size();
    }
    m.batches = batches.size();
    m.dropped = training_indices(ds, state.split).size() - used;
    if (m.batches > 0) {
        const double nb = static_cast<double>(m.batches);
        for (double* v : {&m.total, &m.cls, &m.se, &m.in, &m.s_hcr, &m.t_hcr}) *v /= nb;
    }
    if (m.dropped > 0) spdlog::info("epoch {}: dropped {} remainder instance(s)", epoch, m.dropped);

    state.epoch = epoch;
    state.history.push_back(m);
    return m;
}

std::vector<std::size_t> semantic_labels(const CrossModalDataset& ds, const SeenUnseenSplit& split,
                                         std::size_t clusters) {
    const std::size_t n = split.seen.size();
    const std::size_t d = ds.d_in;
    const std::size_t k = std::min(clusters, n);
    if (k == 0) throw ConfigError("semantic_labels: need at least one cluster and one seen class");

    std::vector<std::vector<double>> means(n, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(n, 0);
    for (const auto& inst : ds.instances) {
        if (!split.is_seen(inst.class_id)) continue;
        const std::size_t s = split.seen_index(inst.class_id);
        for (std::size_t j = 0; j < d; ++j) means[s][j] += inst.feature[j];
        ++counts[s];
    }
    for (std::size_t s = 0; s < n; ++s)
        for (double& x : means[s]) x /= static_cast<double>(counts[s]);

    auto sq = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += (a[j] - b[j]) * (a[j] - b[j]);
        return acc;
    };

    // Farthest-point initialization, then Lloyd iterations.
    std::vector<std::vector<double>> centers{means[0]};
    while (centers.size() < k) {
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t s = 0; s < n; ++s) {
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) nearest = std::min(nearest, sq(means[s], c));
            if (nearest > best_d) {
                best_d = nearest;
                best = s;
            }
        }
        centers.push_back(means[best]);
    }
    std::vector<std::size_t> assign(n, 0);
    for (int iter = 0; iter < 50; ++iter) {
        bool changed = false;
        for (std::size_t s = 0; s < n; ++s) {
            std::size_t arg = 0;
            for (std::size_t c = 1; c < k; ++c) {
                if (sq(means[s], centers[c]) < sq(means[s], centers[arg])) arg = c;
            }
            changed |= arg != assign[s];
            assign[s] = arg;
        }
        if (!changed && iter > 0) break;
        for (std::size_t c = 0; c < k; ++c) {
            std::vector<double> acc(d, 0.0);
            std::size_t members = 0;
            for (std::size_t s = 0; s < n; ++s) {
                if (assign[s] != c) continue;
                for (std::size_t j = 0; j < d; ++j) acc[j] += means[s][j];
                ++members;
            }
            if (members == 0) continue;
            for (double& x : acc) x /= static_cast<double>(members);
            centers[c] = std::move(acc);
        }
    }
    return assign;
}

TeacherModel pretrain_teacher(const CrossModalDataset& ds, const SeenUnseenSplit& split, const TrainConfig& cfg) {
    TeacherModel teacher = init_teacher(cfg.dims(split.seen.size()), cfg.tau, derive_seed(cfg.seed, seed_stream::kTeacher));
    const auto clusters = semantic_labels(ds, split, cfg.semantic_dim);
    const auto params = teacher.named_parameters();

    TrainConfig shuffle_cfg = cfg;
    shuffle_cfg.seed = derive_seed(cfg.seed, seed_stream::kTeacherShuffle);
    for (std::size_t e = 1; e <= cfg.teacher_epochs; ++e) {
        double acc = 0.0;
        const auto batches = epoch_batches(ds, split, shuffle_cfg, e);
        for (const auto& indices : batches) {
            BatchInputs batch = make_batch(ds, split, indices);
            std::vector<std::size_t> targets;
            targets.reserve(batch.labels.size());
            for (std::size_t s : batch.labels) targets.push_back(clusters[s]);
            Tape tape;
            const Tensor loss =
                losses::classification_loss(tape, teacher.logits(tape, batch.features, batch.modality), targets);
            tape.backward(loss);
            sgd_step(params, cfg.learning_rate);
            acc += loss.item();
        }
        spdlog::debug("teacher epoch {}: loss {:.6f}", e, batches.empty() ? 0.0 : acc / static_cast<double>(batches.size()));
    }
    teacher.freeze();
    return teacher;
}

TrainState init_state(const TrainConfig& cfg_in, const CrossModalDataset& ds) {
    TrainConfig cfg = cfg_in;
    if (cfg.d_in == 0) cfg.d_in = ds.d_in;
    if (cfg.d_in != ds.d_in) {
        throw ConfigError("config d_in " + std::to_string(cfg.d_in) + " does not match dataset d_in " +
                          std::to_string(ds.d_in));
    }
    cfg.validate();
    ds.validate();

    SeenUnseenSplit split = make_split(ds, cfg.num_unseen, derive_seed(cfg.seed, seed_stream::kSplit));
    TeacherModel teacher = pretrain_teacher(ds, split, cfg);
    OanModel model = init_model(cfg.dims(split.seen.size()), derive_seed(cfg.seed, seed_stream::kStudent));
    OntologyDictionary dictionary =
        init_dictionary(split.seen.size(), cfg.embed, cfg.w, derive_seed(cfg.seed, seed_stream::kDictionary));
    return TrainState{cfg, std::move(split), std::move(model), std::move(teacher), std::move(dictionary), 0, {}};
}

Tensor retrieval_embeddings(const OanModel& model, const Tensor& features, std::span<const Modality> modality) {
    Tape scratch;
    return diff::l2_normalize_rows(scratch, model.embed(scratch, features, modality)).detach();
}

ZeroShotReport evaluate_zero_shot(const OanModel& model, const CrossModalDataset& ds, const SeenUnseenSplit& split,
                                  std::span<const std::size_t> ks) {
    const auto queries = instances_of(ds, split.unseen, Modality::Sketch);
    const auto gallery = instances_of(ds, split.unseen, Modality::Image);
    const Tensor q = retrieval_embeddings(model, gather_features(ds, queries), gather_modality(ds, queries));
    const Tensor g = retrieval_embeddings(model, gather_features(ds, gallery), gather_modality(ds, gallery));
    const auto ql = gather_labels(ds, queries);
    const auto gl = gather_labels(ds, gallery);
    return ZeroShotReport{retrieval::evaluate_retrieval(q, ql, g, gl, ks, retrieval::Mode::Real),
                          retrieval::evaluate_retrieval(q, ql, g, gl, ks, retrieval::Mode::Binary)};
}

TrainResult run_training(const TrainConfig& cfg, const CrossModalDataset& ds) {
    TrainState state = init_state(cfg, ds);
    while (state.epoch < state.config.epochs) {
        const EpochMetrics m = train_epoch(state, ds);
        spdlog::info("epoch {:>3}: total {:.6f} cls {:.6f} se {:.6f} in {:.6f} s_hcr {:.6f} t_hcr {:.6f}", m.epoch,
                     m.total, m.cls, m.se, m.in, m.s_hcr, m.t_hcr);
    }
    ZeroShotReport report = evaluate_zero_shot(state.model, ds, state.split, state.config.ks);
    return TrainResult{std::move(state), std::move(report)};
}

} // namespace oan
