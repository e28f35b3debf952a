#include "cqm/errors.hpp"
#include "cqm/milp.hpp"
#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace cqm::solver;

namespace {

// Fix every binary pattern and solve the remaining LP.
double brute_milp(const MilpProblem& p) {
    double best = kInf;
    const std::size_t b = p.binaries.size();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << b); ++mask) {
        LpProblem lp = p.lp;
        for (std::size_t k = 0; k < b; ++k) {
            const double v = static_cast<double>((mask >> k) & 1u);
            lp.lower[p.binaries[k]] = lp.upper[p.binaries[k]] = v;
        }
        const auto s = lp_solve(lp);
        if (s.status == LpStatus::Optimal) best = std::min(best, s.objective);
    }
    return best;
}

MilpProblem random_milp(std::mt19937_64& rng) {
    MilpProblem p;
    const std::size_t nb = oracle::pick(rng, 2, 6), nc = oracle::pick(rng, 1, 3);
    for (std::size_t j = 0; j < nb; ++j) p.binaries.push_back(p.lp.add_variable(oracle::uniform(rng, -4, 4), 0.0, 1.0));
    for (std::size_t j = 0; j < nc; ++j) p.lp.add_variable(oracle::uniform(rng, -1, 2), 0.0, 10.0);
    const std::size_t m = oracle::pick(rng, 1, 4);
    for (std::size_t r = 0; r < m; ++r) {
        std::vector<Term> t;
        for (std::size_t j = 0; j < nb + nc; ++j) t.push_back({j, oracle::uniform(rng, -3, 3)});
        p.lp.add_row(t, rng() % 2 ? Sense::LessEqual : Sense::GreaterEqual, oracle::uniform(rng, -2, 4));
    }
    return p;
}

}  // namespace

TEST_SUITE("milp") {

TEST_CASE("forced binary") {
    // min t s.t. t >= 5(1 - v), v <= 0
    MilpProblem p;
    const auto t = p.lp.add_variable(1.0, -kInf, kInf);
    const auto v = p.lp.add_variable(0.0, 0.0, 1.0);
    p.binaries = {v};
    p.lp.add_row({{t, 1.0}, {v, 5.0}}, Sense::GreaterEqual, 5.0);
    p.lp.add_row({{v, 1.0}}, Sense::LessEqual, 0.0);
    const auto r = milp_solve(p);
    REQUIRE(r.incumbent);
    CHECK(r.status == MilpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(5.0));
    CHECK((*r.incumbent)[v] == doctest::Approx(0.0));
    CHECK(r.gap == doctest::Approx(0.0));
}

TEST_CASE("time limit zero stops at the root") {
    MilpProblem p;
    const auto t = p.lp.add_variable(1.0, -kInf, kInf);
    const auto v = p.lp.add_variable(0.0, 0.0, 1.0);
    const auto u = p.lp.add_variable(0.0, 0.0, 1.0);
    p.binaries = {v, u};
    p.lp.add_row({{t, 1.0}, {v, 4.0}, {u, 4.0}}, Sense::GreaterEqual, 6.0);
    p.lp.add_row({{v, 1.0}, {u, 1.0}}, Sense::LessEqual, 1.5);
    MilpOptions o;
    o.time_limit = 0.0;
    const auto r = milp_solve(p, o);
    CHECK(r.status == MilpStatus::TimeLimit);
    CHECK(r.lower_bound == doctest::Approx(0.0));  // root relaxation: v + u = 1.5
    o.floor = 1.0;
    CHECK(milp_solve(p, o).lower_bound == doctest::Approx(1.0));
    o.time_limit.reset();
    o.floor.reset();
    CHECK(milp_solve(p, o).objective == doctest::Approx(2.0));
}

TEST_CASE("infeasible root") {
    MilpProblem p;
    const auto v = p.lp.add_variable(1.0, 0.0, 1.0);
    p.binaries = {v};
    p.lp.add_row({{v, 1.0}}, Sense::GreaterEqual, 2.0);
    CHECK(milp_solve(p).status == MilpStatus::Infeasible);
}

TEST_CASE("integer infeasibility below a feasible relaxation") {
    // v1 + v2 = 1.5 has fractional solutions only
    MilpProblem p;
    const auto a = p.lp.add_variable(1.0, 0.0, 1.0);
    const auto b = p.lp.add_variable(1.0, 0.0, 1.0);
    p.binaries = {a, b};
    p.lp.add_row({{a, 1.0}, {b, 1.0}}, Sense::Equal, 1.5);
    const auto r = milp_solve(p);
    CHECK(r.status == MilpStatus::Infeasible);
    CHECK_FALSE(r.incumbent);
}

TEST_CASE("bad binaries are rejected") {
    MilpProblem p;
    p.lp.add_variable(1.0, 0.0, 3.0);
    p.binaries = {0};
    CHECK_THROWS_AS(milp_solve(p), cqm::InvalidArgument);
}

TEST_CASE("random MILPs: optimum, bound validity, determinism") {
    std::mt19937_64 rng(31);
    int solved = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const MilpProblem p = random_milp(rng);
        const double ref = brute_milp(p);
        const auto r = milp_solve(p);
        if (std::isinf(ref)) {
            CHECK(r.status == MilpStatus::Infeasible);
            continue;
        }
        ++solved;
        REQUIRE(r.incumbent);
        CHECK(r.objective == doctest::Approx(ref).epsilon(1e-6));
        CHECK(r.lower_bound <= ref + 1e-7);
        for (std::size_t b : p.binaries) {
            const double v = (*r.incumbent)[b];
            CHECK(std::min(std::abs(v), std::abs(v - 1.0)) < 1e-6);
        }

        // a loose gap or an immediate stop still yields a valid bound
        MilpOptions loose;
        loose.rel_gap = 0.3;
        const auto g = milp_solve(p, loose);
        CHECK(g.lower_bound <= ref + 1e-7);
        if (g.status == MilpStatus::GapReached) CHECK(g.gap <= 0.3 + 1e-12);
        MilpOptions stop;
        stop.time_limit = 0.0;
        CHECK(milp_solve(p, stop).lower_bound <= ref + 1e-7);

        const auto again = milp_solve(p);
        CHECK(again.objective == r.objective);
        CHECK(again.node_count == r.node_count);
        CHECK(*again.incumbent == *r.incumbent);
    }
    CHECK(solved > 20);
}

TEST_CASE("relative gap uses a floored denominator") {
    CHECK(relative_gap(10.0, 9.0) == doctest::Approx(0.1));
    CHECK(relative_gap(0.0, 0.0) == doctest::Approx(0.0));
    CHECK(std::isfinite(relative_gap(0.0, -1e-12)));
}

}
