// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "oan/diffcore/tape.hpp"
#include "oan/diffcore/tensor.hpp"

namespace oan::diff {

/// Scalar-valued function of the tensors in `inputs`, built on `tape`.
using ScalarFn = std::function<Tensor(Tape& tape, std::span<const Tensor> inputs)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::size_t entries_checked = 0;
    /// Location of the worst entry.
    std::size_t worst_input = 0;
    std::size_t worst_entry = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Compares the tape gradient of `fn` against central finite differences over
/// every entry of every input that requires grad.
///
/// Per-entry error is |a - n| / max(|a|, |n|, 1e-3 * max_n, 1e-300), where
/// max_n is the largest numeric-gradient magnitude of that input. Entries
/// far below the input's gradient scale are thus judged against that scale
/// rather than against their own round-off.
///
/// fn is evaluated twice at the unperturbed point; a bitwise mismatch throws
/// DeterminismError. step must lie in (0, 1e-2].
GradCheckReport grad_check(const ScalarFn& fn, std::span<const Tensor> inputs, double step = 1e-5,
                           double tolerance = 1e-4);

} // namespace oan::diff
