#include "cqm/errors.hpp"
#include "cqm/quantile_bb.hpp"
#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace cqm::solver;

namespace {

// min t over x in X, t >= floor, t >= a_k x + b_ik for i in the covering set;
// minimised over every minimal covering set.
double brute_cover(const CoverModel& m) {
    const std::size_t N = m.num_scenarios(), d = m.dim_x();
    double best = kInf;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << N); ++mask) {
        double mass = 0.0, lightest = 1.0;
        for (std::size_t i = 0; i < N; ++i)
            if ((mask >> i) & 1u) {
                mass += m.weights[i];
                lightest = std::min(lightest, m.weights[i]);
            }
        if (mass < m.tau - 1e-12 || mass - lightest >= m.tau - 1e-12) continue;
        LpProblem lp = m.first_stage;
        std::fill(lp.objective.begin(), lp.objective.end(), 0.0);
        const auto t = lp.add_variable(1.0, m.floor, kInf);
        for (std::size_t i = 0; i < N; ++i) {
            if (!((mask >> i) & 1u)) continue;
            for (std::size_t k = 0; k < m.num_cuts(); ++k) {
                std::vector<Term> row{{t, 1.0}};
                for (std::size_t c = 0; c < d; ++c) row.push_back({c, -m.slopes[k][c]});
                lp.add_row(row, Sense::GreaterEqual, m.intercepts[i][k]);
            }
        }
        const auto s = lp_solve(lp);
        if (s.status == LpStatus::Optimal) best = std::min(best, s.objective);
    }
    return best;
}

CoverModel random_cover(std::mt19937_64& rng) {
    CoverModel m;
    const std::size_t d = oracle::pick(rng, 1, 3), N = oracle::pick(rng, 2, 9), K = oracle::pick(rng, 1, 5);
    std::vector<Term> sum;
    for (std::size_t c = 0; c < d; ++c) sum.push_back({m.first_stage.add_variable(0.0, 0.0, kInf), 1.0});
    m.first_stage.add_row(sum, Sense::Equal, 10.0);
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> a(d);
        for (double& v : a) v = oracle::uniform(rng, -3, 3);
        m.slopes.push_back(a);
    }
    for (std::size_t i = 0; i < N; ++i) {
        std::vector<double> b(K);
        for (double& v : b) v = oracle::uniform(rng, 0, 40);
        m.intercepts.push_back(b);
    }
    m.weights = oracle::random_weights(rng, N);
    m.tau = oracle::uniform(rng, 0.3, 1.0);
    m.floor = oracle::uniform(rng, -5, 5);
    return m;
}

}  // namespace

TEST_SUITE("quantile_bb") {

TEST_CASE("no cuts returns the floor") {
    CoverModel m;
    m.first_stage.add_variable(0.0, 0.0, 1.0);
    m.intercepts = {{}, {}};
    m.weights = {0.5, 0.5};
    m.floor = 3.0;
    const auto r = cover_solve(m);
    REQUIRE(r.incumbent);
    CHECK(r.objective == doctest::Approx(3.0));
    CHECK(r.lower_bound == doctest::Approx(3.0));
}

TEST_CASE("cover_solve matches minimal-cover enumeration") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 120; ++trial) {
        const CoverModel m = random_cover(rng);
        const double ref = brute_cover(m);
        MilpOptions o;
        const auto r = cover_solve(m, o);
        REQUIRE(r.incumbent);
        CHECK(r.objective == doctest::Approx(ref).epsilon(1e-6));
        CHECK(r.lower_bound <= ref + 1e-6);

        // the incumbent [x, t, v] is self-consistent
        const auto& inc = *r.incumbent;
        const std::size_t d = m.dim_x(), N = m.num_scenarios();
        REQUIRE(inc.size() == d + 1 + N);
        const std::vector<double> x(inc.begin(), inc.begin() + static_cast<std::ptrdiff_t>(d));
        CHECK(cover_objective(m, x) <= inc[d] + 1e-6);
        double mass = 0.0;
        const auto g = cover_costs(m, x);
        for (std::size_t i = 0; i < N; ++i)
            if (inc[d + 1 + i] > 0.5) {
                mass += m.weights[i];
                CHECK(g[i] <= inc[d] + 1e-6);
            }
        CHECK(mass >= m.tau - 1e-9);

        MilpOptions stop;
        stop.time_limit = 0.0;
        const auto s = cover_solve(m, stop);
        CHECK(s.lower_bound <= ref + 1e-6);
        CHECK(s.lower_bound >= m.floor - 1e-12);
    }
}

TEST_CASE("cover_costs takes the max over cuts") {
    CoverModel m;
    m.first_stage.add_variable(0.0, 0.0, 10.0);
    m.slopes = {{1.0}, {-1.0}};
    m.intercepts = {{0.0, 4.0}, {2.0, 0.0}};
    m.weights = {0.5, 0.5};
    const std::vector<double> x{3.0};
    const auto g = cover_costs(m, x);
    CHECK(g[0] == doctest::Approx(3.0));
    CHECK(g[1] == doctest::Approx(5.0));
    m.tau = 0.5;
    CHECK(cover_objective(m, x) == doctest::Approx(3.0));
}

TEST_CASE("validation") {
    CoverModel m;
    m.first_stage.add_variable(0.0, 0.0, 1.0);
    m.slopes = {{1.0, 2.0}};
    m.intercepts = {{0.0}};
    m.weights = {1.0};
    CHECK_THROWS_AS(m.validate(), cqm::InvalidArgument);
}

}
