// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oan/diffcore/grad_check.hpp"
#include "oan/diffcore/ops.hpp"
#include "oan/errors.hpp"

using namespace oan;
using namespace oan::diff;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, std::uint64_t seed, bool grad = true, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    std::vector<double> d(r * c);
    for (double& x : d) x = g(rng);
    return Tensor(r, c, d, grad);
}

// Independent central-difference oracle: perturbs one entry at a time.
std::vector<double> fd_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        Tensor xp = x.detach(), xm = x.detach();
        xp.mutable_data()[i] += h;
        xm.mutable_data()[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2 * h);
    }
    return g;
}

void check_close(std::span<const double> a, std::span<const double> b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol * std::max(1.0, std::abs(b[i])));
}

} // namespace

TEST_CASE("tensor construction validates shape") {
    CHECK_THROWS_AS(Tensor(2, 3, std::vector<double>(5)), ShapeError);
    Tensor t = Tensor::from_rows({{1, 2}, {3, 4}, {5, 6}});
    CHECK(t.rows() == 3);
    CHECK(t.cols() == 2);
    CHECK(t(2, 1) == 6);
    CHECK_THROWS_AS(t.item(), ShapeError);
    CHECK(Tensor::scalar(2.5).item() == 2.5);
}

TEST_CASE("detach and clone copy storage") {
    Tensor a = Tensor::from_rows({{1, 2}}, true);
    Tensor d = a.detach();
    CHECK_FALSE(d.requires_grad());
    CHECK_FALSE(d.same_storage(a));
    CHECK(d.bit_equal(a));
    d.mutable_data()[0] = 9;
    CHECK(a(0, 0) == 1);
}

TEST_CASE("matmul forward and the ones times B transpose gradient") {
    Tape tape;
    Tensor a = Tensor::from_rows({{1, 2}, {3, 4}}, true);
    Tensor b = Tensor::from_rows({{5, 6, 7}, {8, 9, 10}});
    Tensor c = matmul(tape, a, b);
    CHECK(c(0, 0) == 21);
    CHECK(c(1, 2) == 61);
    tape.backward(sum(tape, c));
    // d sum(AB) / dA = 1 * B^T: each row of grad holds the row sums of B.
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(a.grad(i, 0) == 18);
        CHECK(a.grad(i, 1) == 27);
    }
    auto fd = fd_gradient(
        [&](const Tensor& x) {
            Tape t;
            return sum(t, matmul(t, x, b)).item();
        },
        a);
    check_close(a.grad(), fd, 1e-6);
    CHECK_THROWS_AS(matmul(tape, a, Tensor::zeros(3, 3)), ShapeError);
}

TEST_CASE("shape errors name both shapes") {
    Tape tape;
    try {
        add(tape, Tensor::zeros(2, 3), Tensor::zeros(3, 2));
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2x3") != std::string::npos);
        CHECK(msg.find("3x2") != std::string::npos);
    }
}

TEST_CASE("relu mask is the indicator of positive inputs") {
    Tape tape;
    Tensor x = Tensor::from_rows({{-1.5, 0.7, 2.0, -0.2}}, true);
    tape.backward(sum(tape, relu(tape, x)));
    const std::vector<double> expect = {0, 1, 1, 0};
    check_close(x.grad(), expect, 0.0);
    Tensor z = Tensor::from_rows({{0.0}}, true);
    Tape t2;
    t2.backward(sum(t2, relu(t2, z)));
    CHECK(z.grad(0, 0) == 0.0);
}

TEST_CASE("log_softmax rows sum to one and survive large logits") {
    Tape tape;
    Tensor x = Tensor::from_rows({{1000, 1001, 1002}, {-5, 0, 5}});
    Tensor lp = log_softmax_rows(tape, x);
    for (std::size_t r = 0; r < 2; ++r) {
        double s = 0;
        for (std::size_t c = 0; c < 3; ++c) s += std::exp(lp(r, c));
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    // log(e^0 / (e^0 + e^1 + e^2)) computed directly
    CHECK(lp(0, 0) == doctest::Approx(-std::log(1 + std::exp(1.0) + std::exp(2.0))).epsilon(1e-12));
    CHECK_THROWS_AS(log_softmax_rows(tape, Tensor::from_rows({{NAN, 1}})), NumericError);
}

TEST_CASE("l2 normalization yields unit rows and rejects zero rows") {
    Tape tape;
    Tensor y = l2_normalize_rows(tape, Tensor::from_rows({{3, 4}, {0, -2}}));
    CHECK(y(0, 0) == doctest::Approx(0.6));
    CHECK(y(0, 1) == doctest::Approx(0.8));
    CHECK(y(1, 1) == -1.0);
    CHECK_THROWS_AS(l2_normalize_rows(tape, Tensor::from_rows({{0, 0}})), DegenerateVectorError);
}

TEST_CASE("pairwise squared distances match the direct definition") {
    Tape tape;
    Tensor x = random_tensor(5, 3, 7, false);
    Tensor d = pairwise_sq_dist(tape, x);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            double s = 0;
            for (std::size_t k = 0; k < 3; ++k) s += (x(i, k) - x(j, k)) * (x(i, k) - x(j, k));
            CHECK(d(i, j) == doctest::Approx(s).epsilon(1e-14));
        }
    for (std::size_t i = 0; i < 5; ++i) CHECK(d(i, i) == 0.0);
    CHECK_THROWS_AS(pairwise_sq_dist(tape, Tensor::zeros(1, 3)), InsufficientPairsError);
}

TEST_CASE("log rejects non-positive input") {
    Tape tape;
    CHECK_THROWS_AS(log(tape, Tensor::from_rows({{1.0, 0.0}})), NumericError);
}

TEST_CASE("gather rows scatters gradients back with repetition") {
    Tape tape;
    Tensor table = Tensor::from_rows({{1, 2}, {3, 4}, {5, 6}}, true);
    const std::vector<std::size_t> idx = {2, 0, 2};
    Tensor g = gather_rows(tape, table, idx);
    CHECK(g(0, 0) == 5);
    CHECK(g(1, 1) == 2);
    tape.backward(sum(tape, g));
    const std::vector<double> expect = {1, 1, 0, 0, 2, 2};
    check_close(table.grad(), expect, 0.0);
    const std::vector<std::size_t> bad = {3};
    CHECK_THROWS_AS(gather_rows(tape, table, bad), LookupError);
}

TEST_CASE("ops without grad inputs do not record") {
    Tape tape;
    Tensor a = random_tensor(2, 2, 1, false);
    Tensor b = matmul(tape, a, a);
    CHECK(tape.size() == 0);
    CHECK_FALSE(b.requires_grad());
    CHECK_THROWS_AS(tape.backward(a), ShapeError);
}

TEST_CASE("backward resets stale gradients") {
    Tensor x = Tensor::from_rows({{2.0}}, true);
    for (int rep = 0; rep < 2; ++rep) {
        Tape tape;
        tape.backward(sum(tape, mul(tape, x, x)));
        CHECK(x.grad(0, 0) == 4.0);
    }
}

TEST_CASE("every primitive composite passes grad_check") {
    using Fn = ScalarFn;
    struct Case {
        const char* name;
        Fn fn;
        std::vector<Tensor> inputs;
    };
    std::vector<Case> cases;
    cases.push_back({"matmul+transpose",
                     [](Tape& t, std::span<const Tensor> in) {
                         return sum(t, mul(t, matmul(t, in[0], transpose(t, in[1])), matmul(t, in[0], transpose(t, in[1]))));
                     },
                     {random_tensor(3, 4, 1), random_tensor(2, 4, 2)}});
    cases.push_back({"add_row+relu",
                     [](Tape& t, std::span<const Tensor> in) { return mean(t, relu(t, add_row(t, in[0], in[1]))); },
                     {random_tensor(4, 3, 3), random_tensor(1, 3, 4)}});
    cases.push_back({"affine+exp+log",
                     [](Tape& t, std::span<const Tensor> in) {
                         return sum(t, log(t, affine(t, exp(t, scale(t, in[0], 0.5)), 2.0, 1.0)));
                     },
                     {random_tensor(3, 3, 5)}});
    cases.push_back({"log_softmax",
                     [](Tape& t, std::span<const Tensor> in) {
                         return sum(t, mul(t, log_softmax_rows(t, in[0]), in[1]));
                     },
                     {random_tensor(4, 5, 6), random_tensor(4, 5, 7)}});
    cases.push_back({"l2_normalize",
                     [](Tape& t, std::span<const Tensor> in) {
                         return sum(t, mul(t, l2_normalize_rows(t, in[0]), in[1]));
                     },
                     {random_tensor(4, 3, 8), random_tensor(4, 3, 9, false)}});
    cases.push_back({"pairwise_sq_dist",
                     [](Tape& t, std::span<const Tensor> in) {
                         return mean(t, exp(t, scale(t, pairwise_sq_dist(t, in[0]), -0.3)));
                     },
                     {random_tensor(5, 3, 10)}});
    cases.push_back({"gather_rows",
                     [](Tape& t, std::span<const Tensor> in) {
                         const std::vector<std::size_t> idx = {1, 0, 1, 2};
                         Tensor g = gather_rows(t, in[0], idx);
                         return sum(t, mul(t, g, g));
                     },
                     {random_tensor(3, 2, 11)}});
    cases.push_back({"clamp interior",
                     [](Tape& t, std::span<const Tensor> in) {
                         return sum(t, mul(t, clamp(t, in[0], -10.0, 10.0), in[0]));
                     },
                     {random_tensor(3, 3, 12)}});
    for (const auto& c : cases) {
        CAPTURE(c.name);
        const auto report = grad_check(c.fn, c.inputs, 1e-5, 1e-4);
        CHECK(report.passed);
        CHECK(report.max_rel_error <= 1e-4);
        CHECK(report.entries_checked > 0);
    }
}

TEST_CASE("grad_check catches a wrong adjoint") {
    // exp recorded with the adjoint of identity: the gradient is wrong by e^x.
    ScalarFn wrong = [](Tape& t, std::span<const Tensor> in) {
        Tensor y(in[0].rows(), in[0].cols(), std::vector<double>(in[0].size()), true);
        for (std::size_t i = 0; i < y.size(); ++i) y.mutable_data()[i] = std::exp(in[0].data()[i]);
        Tensor x = in[0];
        t.record("bad_exp", {x}, y, [x, y] {
            auto& g = x.grad_storage();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += y.grad()[i];
        });
        return sum(t, y);
    };
    const std::vector<Tensor> inputs = {random_tensor(2, 2, 13)};
    const auto report = grad_check(wrong, inputs);
    CHECK_FALSE(report.passed);
    CHECK(report.max_rel_error > 1e-2);
}

TEST_CASE("grad_check validates its step") {
    ScalarFn f = [](Tape& t, std::span<const Tensor> in) { return sum(t, in[0]); };
    const std::vector<Tensor> inputs = {random_tensor(2, 2, 14)};
    CHECK_THROWS_AS(grad_check(f, inputs, 0.0), ConfigError);
    CHECK_THROWS_AS(grad_check(f, inputs, 0.5), ConfigError);
}
