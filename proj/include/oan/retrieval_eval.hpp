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

#include "oan/diffcore/tensor.hpp"

namespace oan::retrieval {

enum class Mode { Real, Binary };
enum class Metric { Euclidean, Hamming };

std::string to_string(Mode m);

struct RetrievalReport {
    double map_all = 0.0;
    std::map<std::size_t, double> prec_at;
    std::vector<double> per_query_ap;
    Mode mode = Mode::Real;

    std::size_t num_queries() const noexcept { return per_query_ap.size(); }
};

/// {"map_all": .., "prec": {"K": ..}, "mode": "real"|"binary", "num_queries": ..}
nlohmann::json to_json(const RetrievalReport& report);

/// AP over a ranked 0/1 relevance list; 0 when nothing is relevant.
double average_precision(std::span<const std::uint8_t> relevance);

/// Relevant items among the top k over k; positions past the list end count
/// as irrelevant. Throws ConfigError for k == 0.
double precision_at_k(std::span<const std::uint8_t> relevance, std::size_t k);

/// Gallery indices by ascending distance to the query, ties by ascending
/// index. Euclidean ranks on squared distance; Hamming counts disagreeing
/// positions.
std::vector<std::size_t> rank_gallery(std::span<const double> query, const diff::Tensor& gallery, Metric metric);

/// Elementwise sign in {-1, +1}, with sign(0) = +1.
diff::Tensor binarize(const diff::Tensor& x);

std::size_t hamming_distance(std::span<const double> a, std::span<const double> b);

/// Sketch-to-image retrieval: every query row ranks the whole gallery
/// (Euclidean in real mode, Hamming over binarize() in binary mode) and an
/// item is relevant when its label matches the query's.
RetrievalReport evaluate_retrieval(const diff::Tensor& queries, std::span<const std::size_t> query_labels,
                                   const diff::Tensor& gallery, std::span<const std::size_t> gallery_labels,
                                   std::span<const std::size_t> ks, Mode mode);

} // namespace oan::retrieval
