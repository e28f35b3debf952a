#include "cqm/errors.hpp"
#include "cqm/estimator.hpp"
#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace cqm;

TEST_SUITE("estimator") {

TEST_CASE("naive kernel keeps the two in-window records") {
    const std::vector<double> z{0, 2, 10};
    const auto w = kernel_weights(z, 1.0, Kernel{KernelKind::Naive, 2.0});
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.5));
    CHECK(w[2] == 0.0);
}

TEST_CASE("a single record normalises to one") {
    const std::vector<double> z{3.7};
    const auto w = kernel_weights(z, 3.7, Kernel{KernelKind::Epanechnikov, 1.0});
    REQUIRE(w.size() == 1);
    CHECK(w[0] == doctest::Approx(1.0));
}

TEST_CASE("an empty window raises NoMass") {
    const std::vector<double> z{10};
    CHECK_THROWS_AS(kernel_weights(z, 0.0, Kernel{KernelKind::Naive, 1.0}), NoMass);
}

TEST_CASE("kernel shapes follow their closed forms") {
    const std::vector<double> z{0.0, 0.5};
    for (auto kind : {KernelKind::Epanechnikov, KernelKind::Tricubic}) {
        const auto w = kernel_weights(z, 0.0, Kernel{kind, 1.0});
        const double k_half = kind == KernelKind::Epanechnikov ? 0.75 : std::pow(1.0 - 0.125, 3);
        CHECK(w[0] == doctest::Approx(1.0 / (1.0 + k_half)));
        CHECK(w[1] == doctest::Approx(k_half / (1.0 + k_half)));
    }
    CHECK_THROWS_AS(kernel_weights(z, 0.0, Kernel{KernelKind::Naive, 0.0}), InvalidArgument);
}

TEST_CASE("knn weights") {
    const std::vector<double> a{0, 1, 5};
    auto w = knn_weights(a, 0.0, 2);
    CHECK(w == std::vector<double>{0.5, 0.5, 0.0});

    const std::vector<double> b{-1, 1};
    w = knn_weights(b, 0.0, 1);
    CHECK(w == std::vector<double>{1.0, 0.0});

    const std::vector<double> c{4, -2, 7, 0};
    w = knn_weights(c, 1.0, 4);
    for (double v : w) CHECK(v == doctest::Approx(0.25));

    CHECK_THROWS_AS(knn_weights(c, 0.0, 5), InvalidArgument);
    CHECK_THROWS_AS(knn_weights(c, 0.0, 0), InvalidArgument);
}

TEST_CASE("weighted quantile examples") {
    const std::vector<double> v1{10, 20, 30};
    CHECK(weighted_quantile(v1, uniform_weights(3), 0.5).value == 20);
    const std::vector<double> v2{1, 2, 3, 4}, w2{0.1, 0.2, 0.3, 0.4};
    const auto q = weighted_quantile(v2, w2, 0.6);
    CHECK(q.value == 3);
    CHECK(q.index == 2);
    const std::vector<double> v3{5}, w3{1};
    CHECK(weighted_quantile(v3, w3, 0.95).value == 5);
}

TEST_CASE("weighted quantile rejects bad input") {
    const std::vector<double> v{1, 2}, w{0.5, 0.5}, w1{1.0};
    CHECK_THROWS_AS(weighted_quantile(v, w1, 0.5), InvalidArgument);
    CHECK_THROWS_AS(weighted_quantile(v, w, 0.0), InvalidArgument);
    CHECK_THROWS_AS(weighted_quantile(v, w, 1.5), InvalidArgument);
}

TEST_CASE("weighted quantile ties report the smallest index") {
    const std::vector<double> v{7, 3, 7, 3}, w{0.25, 0.25, 0.25, 0.25};
    CHECK(weighted_quantile(v, w, 0.5).index == 1);
    CHECK(weighted_quantile(v, w, 0.9).index == 0);
}

TEST_CASE("weighted quantile matches a brute-force CDF scan") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = oracle::pick(rng, 1, 12);
        std::vector<double> v(n);
        for (double& x : v) x = std::round(oracle::uniform(rng, 0, 8));  // ties on purpose
        const auto w = oracle::random_weights(rng, n);
        const double tau = oracle::uniform(rng, 1e-6, 1.0);
        const auto q = weighted_quantile(v, w, tau);
        const auto [bv, bi] = oracle::scan_quantile(v, w, tau);
        CHECK(q.value == bv);
        CHECK(q.index == bi);
    }
}

TEST_CASE("weighted quantile is monotone in tau") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = oracle::pick(rng, 1, 30);
        std::vector<double> v(n);
        for (double& x : v) x = oracle::uniform(rng, -5, 5);
        const auto w = oracle::random_weights(rng, n);
        double t1 = oracle::uniform(rng, 1e-6, 1.0), t2 = oracle::uniform(rng, 1e-6, 1.0);
        if (t1 > t2) std::swap(t1, t2);
        CHECK(weighted_quantile(v, w, t1).value <= weighted_quantile(v, w, t2).value);
    }
}

TEST_CASE("weighted mean examples") {
    const std::vector<double> a{1, 3}, wa{0.5, 0.5};
    CHECK(weighted_mean(a, wa) == doctest::Approx(2));
    const std::vector<double> b{7}, wb{1};
    CHECK(weighted_mean(b, wb) == doctest::Approx(7));
    const std::vector<double> c{0, 10}, wc{0.9, 0.1};
    CHECK(weighted_mean(c, wc) == doctest::Approx(1));
    CHECK_THROWS_AS(weighted_mean(c, wb), InvalidArgument);
}

TEST_CASE("validate_weights") {
    const std::vector<double> ok{0.25, 0.75}, neg{-0.1, 1.1}, off{0.5, 0.4};
    CHECK_NOTHROW(validate_weights(ok));
    CHECK_THROWS_AS(validate_weights(neg), InvalidArgument);
    CHECK_THROWS_AS(validate_weights(off), InvalidArgument);
}

}
