// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "oan/config.hpp"
#include "oan/dataset.hpp"
#include "oan/model.hpp"
#include "oan/ontology_memory.hpp"
#include "oan/retrieval_eval.hpp"

namespace oan {

/// Mean per-term losses of one epoch.
struct EpochMetrics {
    std::size_t epoch = 0;
    double total = 0.0;
    double cls = 0.0;
    double se = 0.0;
    double in = 0.0;
    double s_hcr = 0.0;
    double t_hcr = 0.0;
    double lr = 0.0;
    std::size_t batches = 0;
    std::size_t dropped = 0;  // instances in a dropped single-instance remainder

    bool operator==(const EpochMetrics&) const = default;
};

nlohmann::json to_json(const EpochMetrics& m);

/// Model inputs of one mini-batch. Labels are seen-class indices.
struct BatchInputs {
    Tensor features;
    std::vector<Modality> modality;
    std::vector<std::size_t> labels;
};

BatchInputs make_batch(const CrossModalDataset& ds, const SeenUnseenSplit& split, std::span<const std::size_t> indices);

/// Every term of the objective for one batch. Disabled terms are constant
/// zeros and contribute no gradient.
struct BatchObjective {
    Tensor total;
    Tensor cls;
    Tensor se;
    Tensor in;
    Tensor s_hcr;
    Tensor t_hcr;
    Tensor values;  // unit-norm embeddings fed to the memory
};

/// `self_target`, when given, replaces the detached classification outputs
/// used as the self-distillation target. Gradient checks pin it to its value
/// at the unperturbed parameters.
BatchObjective evaluate_batch(Tape& tape, const OanModel& model, const TeacherModel& teacher,
                              const OntologyDictionary& dictionary, const BatchInputs& batch, const TrainConfig& cfg,
                              const Tensor* self_target = nullptr);

/// p <- p - lr * grad for every parameter; a parameter without a grad is
/// left unchanged. Non-finite gradients throw NumericError naming the
/// parameter, before any parameter is modified.
void sgd_step(std::span<const NamedParameter> params, double lr);

struct TrainState {
    TrainConfig config;
    SeenUnseenSplit split;
    OanModel model;
    TeacherModel teacher;
    OntologyDictionary dictionary;
    std::size_t epoch = 0;
    std::vector<EpochMetrics> history;
};

/// Mini-batches of training-instance indices for one epoch: seen-class
/// instances of both modalities shuffled together with a seed derived from
/// (config seed, epoch). A trailing single-instance batch is dropped.
std::vector<std::vector<std::size_t>> epoch_batches(const CrossModalDataset& ds, const SeenUnseenSplit& split,
                                                    const TrainConfig& cfg, std::size_t epoch);

/// One pass over the seen classes: per batch, the objective, one SGD step,
/// then the detached key update. Throws LabelError if a batch ever holds an
/// unseen-class instance.
EpochMetrics train_epoch(TrainState& state, const CrossModalDataset& ds);

/// Semantic cluster per seen class: k-means over per-class mean features.
std::vector<std::size_t> semantic_labels(const CrossModalDataset& ds, const SeenUnseenSplit& split,
                                         std::size_t clusters);

/// Trains a fresh teacher on the semantic labeling, then freezes it.
TeacherModel pretrain_teacher(const CrossModalDataset& ds, const SeenUnseenSplit& split, const TrainConfig& cfg);

/// Fresh state: split, frozen pre-trained teacher, student and dictionary.
TrainState init_state(const TrainConfig& cfg, const CrossModalDataset& ds);

struct ZeroShotReport {
    retrieval::RetrievalReport real;
    retrieval::RetrievalReport binary;
};

/// Embeddings used for retrieval: unit-norm student embeddings.
Tensor retrieval_embeddings(const OanModel& model, const Tensor& features, std::span<const Modality> modality);

/// Unseen-class sketches query the unseen-class images.
ZeroShotReport evaluate_zero_shot(const OanModel& model, const CrossModalDataset& ds, const SeenUnseenSplit& split,
                                  std::span<const std::size_t> ks);

struct TrainResult {
    TrainState state;
    ZeroShotReport report;
};

TrainResult run_training(const TrainConfig& cfg, const CrossModalDataset& ds);

} // namespace oan
