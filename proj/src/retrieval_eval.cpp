// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/retrieval_eval.hpp"

#include <algorithm>
#include <numeric>

#include "oan/errors.hpp"

namespace oan::retrieval {

std::string to_string(Mode m) { return m == Mode::Real ? "real" : "binary"; }

nlohmann::json to_json(const RetrievalReport& report) {
    nlohmann::json prec = nlohmann::json::object();
    for (const auto& [k, v] : report.prec_at) prec[std::to_string(k)] = v;
    return nlohmann::json{{"map_all", report.map_all},
                          {"prec", prec},
                          {"mode", to_string(report.mode)},
                          {"num_queries", report.num_queries()}};
}

double average_precision(std::span<const std::uint8_t> relevance) {
    std::size_t hits = 0;
    double acc = 0.0;
    for (std::size_t k = 0; k < relevance.size(); ++k) {
        if (!relevance[k]) continue;
        ++hits;
        acc += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
    return hits == 0 ? 0.0 : acc / static_cast<double>(hits);
}

double precision_at_k(std::span<const std::uint8_t> relevance, std::size_t k) {
    if (k == 0) throw ConfigError("precision_at_k: k must be >= 1");
    const std::size_t top = std::min(k, relevance.size());
    const auto hits = std::count_if(relevance.begin(), relevance.begin() + static_cast<std::ptrdiff_t>(top),
                                    [](std::uint8_t r) { return r != 0; });
    return static_cast<double>(hits) / static_cast<double>(k);
}

std::size_t hamming_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("hamming_distance: length mismatch");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
    return d;
}

std::vector<std::size_t> rank_gallery(std::span<const double> query, const diff::Tensor& gallery, Metric metric) {
    if (query.size() != gallery.cols()) {
        throw ShapeError("rank_gallery: query width " + std::to_string(query.size()) + " vs gallery " +
                         gallery.shape_str());
    }
    const std::size_t g = gallery.rows();
    std::vector<double> dist(g);
    for (std::size_t i = 0; i < g; ++i) {
        auto row = gallery.row(i);
        if (metric == Metric::Hamming) {
            dist[i] = static_cast<double>(hamming_distance(query, row));
        } else {
            double s = 0.0;
            for (std::size_t k = 0; k < row.size(); ++k) {
                const double diff = query[k] - row[k];
                s += diff * diff;
            }
            dist[i] = s;
        }
    }
    std::vector<std::size_t> order(g);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    });
    return order;
}

diff::Tensor binarize(const diff::Tensor& x) {
    std::vector<double> out(x.size());
    auto xd = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] >= 0.0 ? 1.0 : -1.0;
    return diff::Tensor(x.rows(), x.cols(), std::move(out));
}

RetrievalReport evaluate_retrieval(const diff::Tensor& queries, std::span<const std::size_t> query_labels,
                                   const diff::Tensor& gallery, std::span<const std::size_t> gallery_labels,
                                   std::span<const std::size_t> ks, Mode mode) {
    if (gallery.rows() == 0) throw ConfigError("evaluate_retrieval: empty gallery");
    if (query_labels.size() != queries.rows()) throw ShapeError("evaluate_retrieval: one label per query required");
    if (gallery_labels.size() != gallery.rows()) throw ShapeError("evaluate_retrieval: one label per gallery item required");
    if (queries.cols() != gallery.cols()) {
        throw ShapeError("evaluate_retrieval: queries " + queries.shape_str() + " vs gallery " + gallery.shape_str());
    }
    for (std::size_t k : ks) {
        if (k == 0) throw ConfigError("evaluate_retrieval: every K must be >= 1");
    }

    const bool binary = mode == Mode::Binary;
    const diff::Tensor q = binary ? binarize(queries) : queries;
    const diff::Tensor gal = binary ? binarize(gallery) : gallery;
    const Metric metric = binary ? Metric::Hamming : Metric::Euclidean;

    RetrievalReport report;
    report.mode = mode;
    report.per_query_ap.reserve(q.rows());
    std::map<std::size_t, double> prec_sum;
    for (std::size_t k : ks) prec_sum[k] = 0.0;

    std::vector<std::uint8_t> relevance(gal.rows());
    for (std::size_t i = 0; i < q.rows(); ++i) {
        const auto order = rank_gallery(q.row(i), gal, metric);
        for (std::size_t r = 0; r < order.size(); ++r) relevance[r] = gallery_labels[order[r]] == query_labels[i];
        report.per_query_ap.push_back(average_precision(relevance));
        for (auto& [k, acc] : prec_sum) acc += precision_at_k(relevance, k);
    }

    const double nq = static_cast<double>(q.rows());
    if (q.rows() > 0) {
        report.map_all = std::accumulate(report.per_query_ap.begin(), report.per_query_ap.end(), 0.0) / nq;
        for (const auto& [k, acc] : prec_sum) report.prec_at[k] = acc / nq;
    } else {
        for (const auto& [k, acc] : prec_sum) report.prec_at[k] = 0.0;
    }
    return report;
}

} // namespace oan::retrieval
