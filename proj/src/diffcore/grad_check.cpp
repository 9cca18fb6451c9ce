// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/diffcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "oan/errors.hpp"

namespace oan::diff {

namespace {

double evaluate(const ScalarFn& fn, std::span<const Tensor> inputs) {
    Tape tape;
    Tensor out = fn(tape, inputs);
    return out.item();
}

} // namespace

GradCheckReport grad_check(const ScalarFn& fn, std::span<const Tensor> inputs, double step, double tolerance) {
    if (!(step > 0.0 && step <= 1e-2)) throw ConfigError("grad_check: step must lie in (0, 1e-2]");

    GradCheckReport report;
    report.tolerance = tolerance;

    Tape tape;
    Tensor root = fn(tape, inputs);
    const double base = root.item();
    tape.backward(root);

    std::vector<std::vector<double>> analytic(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!inputs[i].requires_grad()) continue;
        if (inputs[i].has_grad()) {
            auto g = inputs[i].grad();
            analytic[i].assign(g.begin(), g.end());
        } else {
            // Input never reached the tape: the function is constant in it.
            analytic[i].assign(inputs[i].size(), 0.0);
        }
    }

    const double replay = evaluate(fn, inputs);
    if (std::memcmp(&replay, &base, sizeof(double)) != 0) {
        throw DeterminismError("grad_check: replaying fn at the same point changed its value");
    }

    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!inputs[i].requires_grad()) continue;
        Tensor x = inputs[i];
        auto xs = x.mutable_data();
        std::vector<double> numeric(xs.size());
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const double orig = xs[k];
            xs[k] = orig + step;
            const double up = evaluate(fn, inputs);
            xs[k] = orig - step;
            const double down = evaluate(fn, inputs);
            xs[k] = orig;
            numeric[k] = (up - down) / (2.0 * step);
        }
        double scale = 0.0;
        for (double v : numeric) scale = std::max(scale, std::abs(v));
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const double a = analytic[i][k];
            const double n = numeric[k];
            const double denom = std::max({std::abs(a), std::abs(n), 1e-3 * scale, 1e-300});
            double rel = std::abs(a - n) / denom;
            if (!std::isfinite(a) || !std::isfinite(n)) rel = std::numeric_limits<double>::infinity();
            ++report.entries_checked;
            if (rel > report.max_rel_error || report.entries_checked == 1) {
                report.max_rel_error = rel;
                report.worst_input = i;
                report.worst_entry = k;
                report.worst_analytic = a;
                report.worst_numeric = n;
            }
        }
    }
    report.passed = report.max_rel_error <= tolerance;
    return report;
}

} // namespace oan::diff
