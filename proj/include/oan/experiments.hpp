// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "oan/config.hpp"
#include "oan/dataset.hpp"
#include "oan/trainer.hpp"

namespace oan::experiments {

/// One row of the loss ablation grid.
struct AblationCell {
    std::string name;
    bool enable_in = false;
    bool enable_t_hcr = false;
    bool enable_s_hcr = false;
};

/// The six flag combinations: baseline, +S, +in, +in+T, +in+S, +in+T+S.
std::vector<AblationCell> ablation_grid();

struct SeedRun {
    std::uint64_t seed = 0;
    ZeroShotReport report;
};

struct CellResult {
    std::vector<SeedRun> runs;

    std::vector<double> map_all(retrieval::Mode mode = retrieval::Mode::Real) const;
    std::vector<double> prec_at(std::size_t k, retrieval::Mode mode = retrieval::Mode::Real) const;
};

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for one value
};
Summary summarize(std::span<const double> values);

/// Trains `cfg` once per seed on a synthetic benchmark regenerated with that
/// seed. Both the data seed and the training seed are set to it.
CellResult run_seeds(const TrainConfig& cfg, const SyntheticSpec& data, std::span<const std::uint64_t> seeds);

struct AblationRow {
    AblationCell cell;
    CellResult result;
};

std::vector<AblationRow> run_ablation(const TrainConfig& base, const SyntheticSpec& data,
                                      std::span<const std::uint64_t> seeds);

/// {"seeds": [...], "ks": [...], "rows": [{"name", "in", "t_hcr", "s_hcr",
///   "map_all": {"mean", "std", "per_seed"}, "prec": {"K": {...}},
///   "map_all_binary": {...}}]}
nlohmann::json ablation_json(const std::vector<AblationRow>& rows, std::span<const std::uint64_t> seeds,
                             std::span<const std::size_t> ks);
std::string ablation_table(const std::vector<AblationRow>& rows, std::span<const std::size_t> ks);

inline const std::vector<double> kSweepLambda2 = {1e-4, 1e-3, 1e-2, 1e-1};
inline const std::vector<double> kSweepLambda3 = {1e-2, 1e-1, 1.0};

struct SweepCell {
    double lambda2 = 0.0;
    double lambda3 = 0.0;
    CellResult result;
};

/// Grid over (lambda2, lambda3) with the other settings of `base`.
std::vector<SweepCell> run_sweep(const TrainConfig& base, const SyntheticSpec& data,
                                 std::span<const std::uint64_t> seeds);

nlohmann::json sweep_json(const std::vector<SweepCell>& cells, std::span<const std::uint64_t> seeds,
                          std::span<const std::size_t> ks);
/// Header "lambda2,lambda3,map_all,prec"; prec is Prec@K for the first K.
std::string sweep_csv(const std::vector<SweepCell>& cells, std::span<const std::size_t> ks);

struct GradCheckEntry {
    std::string name;
    std::size_t instances = 0;
    double max_rel_error = 0.0;
    bool passed = false;
};

/// Finite-difference checks of every loss term and of the full objective
/// through a small model, each on `instances` seeded random inputs.
std::vector<GradCheckEntry> run_gradcheck_suite(std::size_t instances, std::uint64_t seed, double step,
                                                double tolerance);

} // namespace oan::experiments
