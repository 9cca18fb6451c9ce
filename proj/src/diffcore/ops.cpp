// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oan/errors.hpp"

namespace oan::diff {

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
}

// Output tensor that requires grad iff any input does.
Tensor make_output(std::size_t rows, std::size_t cols, std::vector<double> data,
                   std::initializer_list<const Tensor*> inputs) {
    return Tensor(rows, cols, std::move(data), any_requires_grad(inputs));
}

// Elementwise unary op with derivative expressed through input and output.
template <typename Forward, typename Derivative>
Tensor unary(Tape& tape, const char* name, const Tensor& x, Forward f, Derivative df) {
    std::vector<double> out(x.size());
    auto xd = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xd[i]);
    Tensor y = make_output(x.rows(), x.cols(), std::move(out), {&x});
    if (y.requires_grad()) {
        tape.record(name, {x}, y, [x, y, df]() mutable {
            auto gy = y.grad();
            auto xv = x.data();
            auto yv = y.data();
            auto& gx = x.grad_storage();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * df(xv[i], yv[i]);
        });
    }
    return y;
}

} // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ, " + a.shape_str() + " times " + b.shape_str());
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(m * n, 0.0);
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ad[i * k + p];
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bd[p * n + j];
        }
    }
    Tensor c = make_output(m, n, std::move(out), {&a, &b});
    if (c.requires_grad()) {
        tape.record("matmul", {a, b}, c, [a, b, c, m, k, n]() mutable {
            auto gc = c.grad();
            auto ad = a.data();
            auto bd = b.data();
            if (a.requires_grad()) {
                // dA = dC * B^T
                auto& ga = a.grad_storage();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) acc += gc[i * n + j] * bd[p * n + j];
                        ga[i * k + p] += acc;
                    }
            }
            if (b.requires_grad()) {
                // dB = A^T * dC
                auto& gb = b.grad_storage();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        const double aip = ad[i * k + p];
                        for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * gc[i * n + j];
                    }
            }
        });
    }
    return c;
}

Tensor transpose(Tape& tape, const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m * n);
    auto ad = a.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = ad[i * n + j];
    Tensor t = make_output(n, m, std::move(out), {&a});
    if (t.requires_grad()) {
        tape.record("transpose", {a}, t, [a, t, m, n]() mutable {
            auto gt = t.grad();
            auto& ga = a.grad_storage();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += gt[j * m + i];
        });
    }
    return t;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    std::vector<double> out(a.size());
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
    Tensor c = make_output(a.rows(), a.cols(), std::move(out), {&a, &b});
    if (c.requires_grad()) {
        tape.record("add", {a, b}, c, [a, b, c]() mutable {
            auto gc = c.grad();
            for (const Tensor* t : {&a, &b}) {
                if (!t->requires_grad()) continue;
                auto& g = t->grad_storage();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += gc[i];
            }
        });
    }
    return c;
}

Tensor add_row(Tape& tape, const Tensor& a, const Tensor& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw ShapeError("add_row: cannot broadcast " + row.shape_str() + " over " + a.shape_str());
    }
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(a.size());
    auto ad = a.data();
    auto rd = row.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = ad[i * n + j] + rd[j];
    Tensor c = make_output(m, n, std::move(out), {&a, &row});
    if (c.requires_grad()) {
        tape.record("add_row", {a, row}, c, [a, row, c, m, n]() mutable {
            auto gc = c.grad();
            if (a.requires_grad()) {
                auto& ga = a.grad_storage();
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gc[i];
            }
            if (row.requires_grad()) {
                auto& gr = row.grad_storage();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) gr[j] += gc[i * n + j];
            }
        });
    }
    return c;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a, b);
    std::vector<double> out(a.size());
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
    Tensor c = make_output(a.rows(), a.cols(), std::move(out), {&a, &b});
    if (c.requires_grad()) {
        tape.record("mul", {a, b}, c, [a, b, c]() mutable {
            auto gc = c.grad();
            auto ad = a.data();
            auto bd = b.data();
            // a and b may share storage (x * x); accumulate each side separately.
            if (a.requires_grad()) {
                auto& ga = a.grad_storage();
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gc[i] * bd[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad_storage();
                for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gc[i] * ad[i];
            }
        });
    }
    return c;
}

Tensor scale(Tape& tape, const Tensor& a, double factor) { return affine(tape, a, factor, 0.0); }

Tensor affine(Tape& tape, const Tensor& a, double factor, double offset) {
    return unary(
        tape, "affine", a, [factor, offset](double x) { return factor * x + offset; },
        [factor](double, double) { return factor; });
}

Tensor relu(Tape& tape, const Tensor& x) {
    return unary(
        tape, "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(Tape& tape, const Tensor& x) {
    return unary(
        tape, "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(Tape& tape, const Tensor& x) {
    for (double v : x.data()) {
        if (!(v > 0.0)) throw NumericError("log: non-positive input " + std::to_string(v));
    }
    return unary(
        tape, "log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor clamp(Tape& tape, const Tensor& x, double lo, double hi) {
    if (lo > hi) throw ConfigError("clamp: lo > hi");
    return unary(
        tape, "clamp", x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
        [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Tensor log_softmax_rows(Tape& tape, const Tensor& x) {
    const std::size_t m = x.rows(), n = x.cols();
    if (n == 0) throw ShapeError("log_softmax_rows: zero columns");
    std::vector<double> out(x.size());
    auto xd = x.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = xd.data() + i * n;
        double mx = row[0];
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(row[j])) throw NumericError("log_softmax_rows: non-finite input in row " + std::to_string(i));
            mx = std::max(mx, row[j]);
        }
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += std::exp(row[j] - mx);
        const double lse = mx + std::log(s);
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = row[j] - lse;
    }
    Tensor y = make_output(m, n, std::move(out), {&x});
    if (y.requires_grad()) {
        tape.record("log_softmax_rows", {x}, y, [x, y, m, n]() mutable {
            auto gy = y.grad();
            auto yd = y.data();
            auto& gx = x.grad_storage();
            for (std::size_t i = 0; i < m; ++i) {
                double gsum = 0.0;
                for (std::size_t j = 0; j < n; ++j) gsum += gy[i * n + j];
                for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += gy[i * n + j] - std::exp(yd[i * n + j]) * gsum;
            }
        });
    }
    return y;
}

Tensor l2_normalize_rows(Tape& tape, const Tensor& x) {
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(x.size());
    std::vector<double> norms(m);
    auto xd = x.data();
    for (std::size_t i = 0; i < m; ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < n; ++j) ss += xd[i * n + j] * xd[i * n + j];
        const double nrm = std::sqrt(ss);
        if (!(nrm >= kMinRowNorm)) {
            throw DegenerateVectorError("l2_normalize_rows: row " + std::to_string(i) + " has norm " + fmt::format("{:.3g}", nrm));
        }
        norms[i] = nrm;
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xd[i * n + j] / nrm;
    }
    Tensor y = make_output(m, n, std::move(out), {&x});
    if (y.requires_grad()) {
        tape.record("l2_normalize_rows", {x}, y, [x, y, m, n, norms = std::move(norms)]() mutable {
            auto gy = y.grad();
            auto yd = y.data();
            auto& gx = x.grad_storage();
            for (std::size_t i = 0; i < m; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) dot += yd[i * n + j] * gy[i * n + j];
                for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += (gy[i * n + j] - yd[i * n + j] * dot) / norms[i];
            }
        });
    }
    return y;
}

Tensor pairwise_sq_dist(Tape& tape, const Tensor& x) {
    const std::size_t m = x.rows(), d = x.cols();
    if (m < 2) throw InsufficientPairsError("pairwise_sq_dist: need at least 2 rows, got " + std::to_string(m));
    std::vector<double> out(m * m, 0.0);
    auto xd = x.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = xd[i * d + k] - xd[j * d + k];
                s += diff * diff;
            }
            out[i * m + j] = out[j * m + i] = std::max(s, 0.0);
        }
    }
    Tensor y = make_output(m, m, std::move(out), {&x});
    if (y.requires_grad()) {
        tape.record("pairwise_sq_dist", {x}, y, [x, y, m, d]() mutable {
            auto gy = y.grad();
            auto xd = x.data();
            auto& gx = x.grad_storage();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    if (i == j) continue;
                    // Both (i,j) and (j,i) depend on x_i; each visit handles x_i only.
                    const double g = gy[i * m + j] + gy[j * m + i];
                    if (g == 0.0) continue;
                    for (std::size_t k = 0; k < d; ++k) gx[i * d + k] += g * 2.0 * (xd[i * d + k] - xd[j * d + k]);
                }
            }
        });
    }
    return y;
}

Tensor sum(Tape& tape, const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    Tensor y = make_output(1, 1, {s}, {&x});
    if (y.requires_grad()) {
        tape.record("sum", {x}, y, [x, y]() mutable {
            const double g = y.grad()[0];
            for (double& v : x.grad_storage()) v += g;
        });
    }
    return y;
}

Tensor mean(Tape& tape, const Tensor& x) {
    if (x.size() == 0) throw ShapeError("mean of empty tensor");
    return scale(tape, sum(tape, x), 1.0 / static_cast<double>(x.size()));
}

Tensor gather_rows(Tape& tape, const Tensor& table, std::span<const std::size_t> indices) {
    const std::size_t n = table.cols();
    std::vector<double> out(indices.size() * n);
    auto td = table.data();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= table.rows()) {
            throw LookupError("gather_rows: index " + std::to_string(indices[i]) + " out of range for " + table.shape_str());
        }
        std::copy_n(td.begin() + static_cast<std::ptrdiff_t>(indices[i] * n), n, out.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
    Tensor y = make_output(indices.size(), n, std::move(out), {&table});
    if (y.requires_grad()) {
        std::vector<std::size_t> idx(indices.begin(), indices.end());
        tape.record("gather_rows", {table}, y, [table, y, n, idx = std::move(idx)]() mutable {
            auto gy = y.grad();
            auto& gt = table.grad_storage();
            for (std::size_t i = 0; i < idx.size(); ++i)
                for (std::size_t j = 0; j < n; ++j) gt[idx[i] * n + j] += gy[i * n + j];
        });
    }
    return y;
}

} // namespace oan::diff
