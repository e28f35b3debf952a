#include "cqm/asp.hpp"
#include "cqm/errors.hpp"
#include "cqm/twostage.hpp"
#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace cqm;
using solver::MilpOptions;
using solver::milp_solve;

namespace {

ASPInstance n1_instance() {
    ASPInstance inst;
    inst.n = 1;
    inst.c_u = {0.5};
    inst.c_w = {1.0};
    inst.c_o = 10.0;
    inst.T_h = 4.0;
    return inst;
}

double solve_model(const QuantileMilp& m) {
    const auto r = milp_solve(m.milp, MilpOptions{});
    REQUIRE(r.incumbent);
    return r.objective;
}

std::vector<DualVertex> all_vertices(const ASPInstance& inst) {
    std::vector<DualVertex> pool;
    for (const auto& p : enumerate_partitions(inst.n)) pool.push_back(to_two_stage_dual(vertex_from_partition(inst, p)));
    return pool;
}

}  // namespace

TEST_SUITE("twostage") {

TEST_CASE("recourse value on the ASP encoding") {
    const auto inst = n1_instance();
    const auto p = to_two_stage(inst);
    CHECK(recourse_value(p, {4.0}, {6.0}) == doctest::Approx(20.0));
    CHECK(recourse_value(p, {4.0}, {4.0}) == doctest::Approx(0.0));
    const auto inst2 = ASPInstance::standard(3, 30.0);
    CHECK(recourse_value(to_two_stage(inst2), {10, 12, 8}, {10, 12, 8}) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("nonpositive right-hand side gives zero recourse") {
    TwoStageLP p;
    p.q = {1.0, 2.0};
    p.T = {{1.0}};
    p.W = {{1.0, 1.0}};
    p.C = {{1.0}};
    p.h = {0.0};
    p.first_stage.lower = {0.0};
    p.first_stage.upper = {solver::kInf};
    const auto r = solve_recourse(p, {2.0}, {3.0});
    CHECK(r.value == doctest::Approx(0.0));
    for (double y : r.y) CHECK(y == doctest::Approx(0.0));
}

TEST_CASE("infeasible recourse is a model error") {
    TwoStageLP p;
    p.q = {1.0};
    p.T = {{0.0}};
    p.W = {{-1.0}};
    p.C = {{0.0}};
    p.h = {1.0};  // -y >= 1 with y >= 0
    p.first_stage.lower = {0.0};
    p.first_stage.upper = {1.0};
    CHECK_THROWS_AS(recourse_value(p, {0.0}, {0.0}), ModelError);
}

TEST_CASE("dual value") {
    const auto inst = n1_instance();
    const auto p = to_two_stage(inst);
    DualVertex zero{std::vector<double>(p.num_rows(), 0.0)};
    CHECK(is_dual_feasible(p, zero));
    CHECK(dual_value(p, zero, {4.0}, {6.0}) == doctest::Approx(0.0));

    const std::vector<double> x{4.0}, s{6.0};
    const auto pi = to_two_stage_dual(optimal_dual(inst, x, s));
    CHECK(is_dual_feasible(p, pi));
    CHECK(dual_value(p, pi, {4.0}, {6.0}) == doctest::Approx(20.0));

    // the LP's own dual is optimal too
    const auto rs = solve_recourse(p, {4.0}, {6.0});
    CHECK(is_dual_feasible(p, rs.dual));
    CHECK(dual_value(p, rs.dual, {4.0}, {6.0}) == doctest::Approx(20.0));
}

TEST_CASE("weak duality over random feasible duals") {
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 100; ++trial) {
        const auto inst = oracle::random_instance(rng, oracle::pick(rng, 1, 4));
        const auto p = to_two_stage(inst);
        const auto x = oracle::random_schedule(rng, inst);
        const auto s = oracle::random_durations(rng, inst);
        const double f = recourse_value(p, x, s);
        const auto parts = enumerate_partitions(inst.n);
        // convex combination of two vertices is dual feasible as well
        const auto a = to_two_stage_dual(vertex_from_partition(inst, parts[rng() % parts.size()]));
        const auto b = to_two_stage_dual(vertex_from_partition(inst, parts[rng() % parts.size()]));
        const double lam = oracle::uniform(rng, 0, 1);
        DualVertex mix_v;
        for (std::size_t k = 0; k < a.pi.size(); ++k) mix_v.pi.push_back(lam * a.pi[k] + (1 - lam) * b.pi[k]);
        const DualVertex& mix = mix_v;
        for (const DualVertex* pi : {&a, &b, &mix}) {
            REQUIRE(is_dual_feasible(p, *pi));
            CHECK(dual_value(p, *pi, x, s) <= f + 1e-8);
        }
    }
}

TEST_CASE("direct MILP: single scenario must be covered") {
    std::mt19937_64 rng(52);
    const auto inst = oracle::random_instance(rng, 2);
    ScenarioSet sc;
    sc.xi = {oracle::random_durations(rng, inst)};
    sc.weights = {1.0};
    const auto m = build_direct_milp(to_two_stage(inst), sc, 0.95, big_m_bound(inst, sc));
    CHECK(solve_model(m) == doctest::Approx(oracle::cover_lp(inst, sc, {0})).epsilon(1e-7));
}

TEST_CASE("direct MILP: two scenarios at tau 0.5 cover the cheaper one") {
    std::mt19937_64 rng(53);
    const auto inst = oracle::random_instance(rng, 2);
    ScenarioSet sc;
    sc.xi = {oracle::random_durations(rng, inst), oracle::random_durations(rng, inst)};
    sc.weights = {0.5, 0.5};
    const auto m = build_direct_milp(to_two_stage(inst), sc, 0.5, big_m_bound(inst, sc));
    const double ref = std::min(oracle::cover_lp(inst, sc, {0}), oracle::cover_lp(inst, sc, {1}));
    CHECK(solve_model(m) == doctest::Approx(ref).epsilon(1e-7));
}

TEST_CASE("direct MILP equals v-pattern enumeration") {
    std::mt19937_64 rng(54);
    for (int trial = 0; trial < 12; ++trial) {
        const auto inst = oracle::random_instance(rng, oracle::pick(rng, 1, 3));
        const auto sc = oracle::random_scenarios(rng, inst, oracle::pick(rng, 2, 7));
        const double tau = oracle::uniform(rng, 0.4, 0.95);
        const auto m = build_direct_milp(to_two_stage(inst), sc, tau, big_m_bound(inst, sc));
        CHECK(m.num_scenarios == sc.size());
        CHECK(m.big_m == big_m_bound(inst, sc));
        const auto r = milp_solve(m.milp);
        REQUIRE(r.incumbent);
        const double ref = oracle::brute_quantile_optimum(inst, sc, tau);
        CHECK(r.objective == doctest::Approx(ref).epsilon(1e-6));
        const auto x = m.x_of(*r.incumbent);
        const auto v = m.v_of(*r.incumbent);
        double mass = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) mass += v[i] * sc.weights[i];
        CHECK(mass >= tau - 1e-9);
    }
}

TEST_CASE("master problems") {
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 8; ++trial) {
        const auto inst = oracle::random_instance(rng, oracle::pick(rng, 1, 3));
        const auto sc = oracle::random_scenarios(rng, inst, oracle::pick(rng, 2, 6));
        const double tau = oracle::uniform(rng, 0.4, 0.95);
        const auto p = to_two_stage(inst);
        const double M = big_m_bound(inst, sc);

        // empty pool: only the floor binds
        CHECK(solve_model(build_master(p, sc, tau, M, {}, 0.0)) == doctest::Approx(0.0));

        const double direct = solve_model(build_direct_milp(p, sc, tau, M));
        const auto pool = all_vertices(inst);
        CHECK(solve_model(build_master(p, sc, tau, M, pool, 0.0)) == doctest::Approx(direct).epsilon(1e-6));
        CHECK(solve_model(build_master(p, sc, tau, M, pool, direct)) == doctest::Approx(direct).epsilon(1e-6));

        // the cover form agrees with the dense form
        const auto cover = solver::cover_solve(build_master_cover(p, sc, tau, pool, 0.0));
        CHECK(cover.objective == doctest::Approx(direct).epsilon(1e-6));

        // nested pools give nondecreasing optima
        double prev = 0.0;
        std::vector<DualVertex> grow;
        for (const auto& v : pool) {
            grow.push_back(v);
            const double cur = solve_model(build_master(p, sc, tau, M, grow, 0.0));
            CHECK(cur >= prev - 1e-7);
            const auto c = solver::cover_solve(build_master_cover(p, sc, tau, grow, 0.0));
            CHECK(c.objective == doctest::Approx(cur).epsilon(1e-6));
            prev = cur;
        }
    }
}

TEST_CASE("master rejects infeasible duals") {
    const auto inst = n1_instance();
    const auto p = to_two_stage(inst);
    ScenarioSet sc{{{6.0}}, {1.0}};
    DualVertex bad{{100.0, 0.0}};
    CHECK_THROWS_AS(build_master(p, sc, 0.9, 68.0, {bad}, 0.0), InvalidArgument);
}

TEST_CASE("big-M bound") {
    const auto inst = n1_instance();
    ScenarioSet sc{{{6.0}}, {1.0}};
    CHECK(big_m_bound(inst, sc) == doctest::Approx(68.0));

    ScenarioSet zero{{{0.0}}, {1.0}};
    CHECK(big_m_bound(inst, zero) == doctest::Approx(4.0 * 0.5));

    ScenarioSet dbl{{{12.0}}, {1.0}};
    CHECK(big_m_bound(inst, dbl) - 2.0 == doctest::Approx(2.0 * (68.0 - 2.0)));

    std::mt19937_64 rng(56);
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = oracle::random_instance(rng, oracle::pick(rng, 1, 6));
        const auto s = oracle::random_scenarios(rng, in, 5);
        const double M = big_m_bound(in, s);
        for (int k = 0; k < 50; ++k) {
            const auto x = oracle::random_schedule(rng, in);
            for (const auto& xi : s.xi) CHECK(oracle::hand_recursion(in, x, xi) <= M);
        }
    }
}

TEST_CASE("model dump lists M and the coverage row") {
    const auto inst = n1_instance();
    ScenarioSet sc{{{6.0}, {3.0}}, {0.5, 0.5}};
    const auto m = build_direct_milp(to_two_stage(inst), sc, 0.5, 68.0);
    const std::string j = dump_json(m);
    CHECK(j.find("\"big_m\"") != std::string::npos);
    CHECK(j.find("\"constraints\"") != std::string::npos);
    CHECK(j.find("\"variables\"") != std::string::npos);
}

}
