// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "oan/errors.hpp"
#include "oan/ontology_memory.hpp"
#include "test_util.hpp"

using namespace oan;
using diff::Tensor;
using test::random_tensor;
using test::row_norm;

namespace {

BatchValues batch_of(Tensor values, std::vector<std::size_t> labels) {
    std::vector<Modality> m(labels.size(), Modality::Sketch);
    return BatchValues{std::move(values), std::move(labels), std::move(m)};
}

} // namespace

TEST_CASE("update blends then renormalizes, one instance at a time") {
    OntologyDictionary dict(Tensor::from_rows({{1, 0}, {0, 1}}), 0.5);
    dict.update(batch_of(Tensor::from_rows({{0, 1}, {0, 1}}), {0, 0}));
    // first: (0.5, 0.5)/|.| = (1/sqrt2, 1/sqrt2); second: blend with (0, 1) again
    const double a = 0.5 / std::sqrt(2.0), b = 0.5 / std::sqrt(2.0) + 0.5;
    const double n = std::hypot(a, b);
    CHECK(dict.keys()(0, 0) == doctest::Approx(a / n).epsilon(1e-15));
    CHECK(dict.keys()(0, 1) == doctest::Approx(b / n).epsilon(1e-15));
    CHECK(dict.keys()(1, 0) == 0.0);
    CHECK(dict.keys()(1, 1) == 1.0);
}

TEST_CASE("momentum zero replaces the key with the normalized value") {
    OntologyDictionary dict = init_dictionary(3, 4, 0.0, 5);
    dict.update(batch_of(Tensor::from_rows({{0, 3, 0, 4}}), {1}));
    CHECK(dict.keys()(1, 1) == doctest::Approx(0.6));
    CHECK(dict.keys()(1, 3) == doctest::Approx(0.8));
}

TEST_CASE("momentum one keeps keys fixed up to renormalization") {
    OntologyDictionary dict = init_dictionary(3, 4, 1.0, 6);
    const Tensor before = dict.keys().detach();
    dict.update(batch_of(random_tensor(5, 4, 1), {0, 1, 2, 0, 1}));
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(dict.keys().data()[i] == doctest::Approx(before.data()[i]));
}

TEST_CASE("keys stay unit norm and untouched keys stay bit-identical") {
    OntologyDictionary dict = init_dictionary(8, 6, 0.3, 11);
    const Tensor initial = dict.keys().detach();
    std::mt19937_64 rng(42);
    std::vector<bool> touched(8, false);
    for (int step = 0; step < 200; ++step) {
        std::vector<std::size_t> labels(4);
        // classes 6 and 7 are never drawn
        for (auto& l : labels) {
            l = rng() % 6;
            touched[l] = true;
        }
        dict.update(batch_of(random_tensor(4, 6, rng()), labels));
        for (std::size_t c = 0; c < 8; ++c) REQUIRE(std::abs(row_norm(dict.keys(), c) - 1.0) <= 1e-9);
    }
    for (std::size_t c = 6; c < 8; ++c) {
        CHECK(std::memcmp(&dict.keys().data()[c * 6], &initial.data()[c * 6], 6 * sizeof(double)) == 0);
    }
}

TEST_CASE("update validates its batch") {
    OntologyDictionary dict = init_dictionary(3, 4, 0.5, 1);
    CHECK_THROWS_AS(dict.update(batch_of(random_tensor(2, 5, 1), {0, 1})), ShapeError);
    CHECK_THROWS_AS(dict.update(batch_of(random_tensor(2, 4, 1), {0})), ShapeError);
    CHECK_THROWS_AS(dict.update(batch_of(random_tensor(1, 4, 1), {3})), LabelError);
    CHECK_THROWS_AS(dict.update(batch_of(Tensor::from_rows({{NAN, 0, 0, 0}}), {0})), NumericError);
    // equal and opposite blend cancels exactly
    OntologyDictionary two(Tensor::from_rows({{1, 0}}), 0.5);
    CHECK_THROWS_AS(two.update(batch_of(Tensor::from_rows({{-1, 0}}), {0})), DegenerateVectorError);
}

TEST_CASE("dictionary construction checks momentum and shape") {
    CHECK_THROWS_AS(OntologyDictionary(Tensor::from_rows({{1, 0}}), 1.5), ConfigError);
    CHECK_THROWS_AS(OntologyDictionary(Tensor::from_rows({{1, 0}}), -0.1), ConfigError);
    CHECK_THROWS_AS(OntologyDictionary(Tensor::from_rows({{1}}), 0.5), ConfigError);
}

TEST_CASE("lookup returns constant copies in request order") {
    OntologyDictionary dict = init_dictionary(4, 3, 0.1, 2);
    const std::vector<std::size_t> ids = {3, 1};
    Tensor got = dict.lookup(ids);
    CHECK_FALSE(got.requires_grad());
    CHECK(got.rows() == 2);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(got(0, k) == dict.keys()(3, k));
        CHECK(got(1, k) == dict.keys()(1, k));
    }
    got.mutable_data()[0] = 99.0;
    CHECK(dict.keys()(3, 0) != 99.0);
    const std::vector<std::size_t> bad = {4};
    CHECK_THROWS_AS(dict.lookup(bad), LookupError);
}

TEST_CASE("init_dictionary is seeded and unit norm") {
    const auto a = init_dictionary(5, 8, 0.01, 9);
    const auto b = init_dictionary(5, 8, 0.01, 9);
    const auto c = init_dictionary(5, 8, 0.01, 10);
    CHECK(a.keys().bit_equal(b.keys()));
    CHECK_FALSE(a.keys().bit_equal(c.keys()));
    for (std::size_t r = 0; r < 5; ++r) CHECK(row_norm(a.keys(), r) == doctest::Approx(1.0).epsilon(1e-14));
}
