#include "cqm/sicg.hpp"

#include "cqm/errors.hpp"
#include "cqm/milp.hpp"
#include "cqm/quantile_bb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace cqm {

using solver::kInf;

void SiCGParams::validate() const {
    if (!(eps > 0.0)) throw InvalidArgument("SiCG: eps must be positive");
    if (!(eps_tilde > 0.0 && eps_tilde < eps / (1.0 + eps)))
        throw InvalidArgument("SiCG: eps_tilde must lie in (0, eps / (1 + eps))");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("SiCG: alpha must lie in (0, 1)");
    if (!(eps_mp0 > 0.0)) throw InvalidArgument("SiCG: eps_mp0 must be positive");
    if (kappa && !(*kappa >= 0.0)) throw InvalidArgument("SiCG: kappa must be nonnegative");
    if (beta && !(*beta >= 0.0)) throw InvalidArgument("SiCG: beta must be nonnegative");
    if (!(tau > 0.0 && tau <= 1.0)) throw InvalidArgument("SiCG: tau must lie in (0, 1]");
    if (total_time_limit && !(*total_time_limit > 0.0)) throw InvalidArgument("SiCG: total time limit must be positive");
    if (big_m && !(*big_m > 0.0)) throw InvalidArgument("SiCG: big-M must be positive");
}

double certified_gap(double upper, double lower) {
    if (!std::isfinite(upper)) return kInf;
    if (upper == 0.0) return 0.0;
    return (upper - lower) / upper;
}

QuantileResult quantile_objective(const ASPInstance& instance, const ScenarioSet& scenarios,
                                  std::span<const double> x, double tau) {
    std::vector<double> costs(scenarios.size());
    for (std::size_t i = 0; i < costs.size(); ++i) costs[i] = recourse_cost(instance, x, scenarios.xi[i]);
    return weighted_quantile(costs, scenarios.weights, tau);
}

ASPDualVertex explore_vertex(const ASPInstance& instance, const std::set<IntervalPartition>& pool,
                             std::span<const double> x, const ScenarioSet& scenarios, std::size_t idx,
                             std::optional<std::size_t> idx_prime, std::mt19937_64& rng) {
    const std::size_t n = instance.n;
    ASPDualVertex v = optimal_dual(instance, x, scenarios.xi.at(idx));
    if (!pool.count(v.partition)) return v;
    if (idx_prime) {
        v = optimal_dual(instance, x, scenarios.xi.at(*idx_prime));
        if (!pool.count(v.partition)) return v;
    }
    const std::uint64_t total = std::uint64_t{1} << n;
    if (pool.size() >= total) throw InvalidArgument("explore_vertex: the pool already holds every vertex");
    // each cut is a fair coin, so every partition is equally likely
    const std::uint64_t mask = total - 1;
    for (std::uint64_t r = 0; r < 50 * total; ++r) {
        const IntervalPartition p{n, rng() & mask};
        if (!pool.count(p)) return vertex_from_partition(instance, p);
    }
    for (std::uint64_t m = 0; m < total; ++m) {
        const IntervalPartition p{n, m};
        if (!pool.count(p)) return vertex_from_partition(instance, p);
    }
    throw SolverError("explore_vertex: no vertex outside the pool");
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::ostringstream out;
    out << "iter,phase,L_ell,U_bar,U_j,eps_mp,pool_size,master_time\n";
    char buf[256];
    for (const TraceRow& r : trace) {
        std::snprintf(buf, sizeof buf, "%zu,%s,%.10g,%.10g,%.10g,%.6g,%zu,%.4f\n", r.iter, r.phase.c_str(), r.L_ell,
                      r.U_bar, r.U_j, r.eps_mp, r.pool_size, r.master_time);
        out << buf;
    }
    return out.str();
}

namespace {

struct MasterOutcome {
    solver::MilpResult result;
    std::vector<double> x;
    std::vector<int> v;
};

solver::CoverModel cover_master(const ASPInstance& instance, const ScenarioSet& scenarios, double tau,
                                const std::vector<ASPDualVertex>& pool, double floor) {
    const std::size_t n = instance.n;
    solver::CoverModel cm;
    std::vector<solver::Term> sum;
    for (std::size_t i = 0; i < n; ++i) {
        cm.first_stage.add_variable(0.0, 0.0, kInf);
        sum.push_back({i, 1.0});
    }
    cm.first_stage.add_row(std::move(sum), solver::Sense::Equal, instance.T_h, "horizon");
    for (const ASPDualVertex& v : pool) {
        std::vector<double> slope(n);
        for (std::size_t c = 0; c < n; ++c) slope[c] = -v.y[c];
        cm.slopes.push_back(std::move(slope));
    }
    cm.intercepts.assign(scenarios.size(), std::vector<double>(pool.size()));
    for (std::size_t i = 0; i < scenarios.size(); ++i)
        for (std::size_t k = 0; k < pool.size(); ++k) {
            double b = 0.0;
            for (std::size_t c = 0; c < n; ++c) b += pool[k].y[c] * scenarios.xi[i][c];
            cm.intercepts[i][k] = b;
        }
    cm.weights = scenarios.weights;
    cm.tau = tau;
    cm.floor = floor;
    return cm;
}

MasterOutcome solve_master(const ASPInstance& instance, const ScenarioSet& scenarios, const SiCGParams& params,
                           const TwoStageLP& encoded, double big_m, const std::vector<ASPDualVertex>& pool,
                           double floor, const solver::MilpOptions& options, const std::vector<double>& hint) {
    MasterOutcome out;
    const std::size_t n = instance.n;
    if (params.engine == MasterEngine::Cover) {
        solver::CoverModel cm = cover_master(instance, scenarios, params.tau, pool, floor);
        cm.hint = hint;
        out.result = solver::cover_solve(cm, options);
        if (!out.result.incumbent) throw SolverError("master problem returned no incumbent");
        const auto& inc = *out.result.incumbent;
        out.x.assign(inc.begin(), inc.begin() + static_cast<std::ptrdiff_t>(n));
        for (std::size_t i = 0; i < scenarios.size(); ++i) out.v.push_back(inc[n + 1 + i] > 0.5 ? 1 : 0);
    } else {
        std::vector<DualVertex> duals;
        for (const auto& v : pool) duals.push_back(to_two_stage_dual(v));
        const QuantileMilp master = build_master(encoded, scenarios, params.tau, big_m, duals, floor);
        out.result = solver::milp_solve(master.milp, options);
        if (!out.result.incumbent) throw SolverError("master problem returned no incumbent");
        out.x = master.x_of(*out.result.incumbent);
        out.v = master.v_of(*out.result.incumbent);
    }
    for (double& xi : out.x) xi = std::max(xi, 0.0);
    return out;
}

}  // namespace

SiCGResult sicg_solve(const ASPInstance& instance, const ScenarioSet& scenarios, const SiCGParams& params) {
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

    instance.validate();
    scenarios.validate();
    params.validate();
    const std::size_t n = instance.n;
    if (scenarios.dim() != n) throw InvalidArgument("sicg_solve: scenario width differs from n");
    if (n > 30) throw InvalidArgument("sicg_solve: n must be at most 30");
    const std::uint64_t vertex_count = std::uint64_t{1} << n;
    const std::size_t cap = params.max_iterations.value_or(static_cast<std::size_t>(10 * vertex_count + 1000));

    TwoStageLP encoded;
    double big_m = 0.0;
    if (params.engine == MasterEngine::Dense) {
        encoded = to_two_stage(instance);
        big_m = params.big_m.value_or(big_m_bound(instance, scenarios));
    }

    std::mt19937_64 rng(params.seed);
    std::vector<ASPDualVertex> pool;
    std::set<IntervalPartition> pool_ids;
    double L_bar = 0.0, U_bar = kInf, L_ell = 0.0;
    double eps_mp = params.eps_mp0;
    std::optional<double> kappa = params.kappa;
    std::vector<double> best_x, last_x;

    SiCGResult res;
    std::size_t j = 0;
    while (certified_gap(U_bar, L_ell) > params.eps) {
        if (j >= cap) {
            std::string tail = trace_csv(res.trace);
            throw SolverError("SiCG iteration cap " + std::to_string(cap) + " reached; trace:\n" + tail);
        }
        std::optional<double> master_limit = kappa;
        if (params.total_time_limit) {
            const double left = *params.total_time_limit - elapsed();
            if (left <= 0.0 && !best_x.empty()) break;
            master_limit = master_limit ? std::min(*master_limit, std::max(left, 0.0)) : std::max(left, 0.0);
        }
        ++j;

        // Step 1: inexact master
        solver::MilpOptions mo;
        mo.rel_gap = eps_mp;
        mo.time_limit = master_limit;
        mo.floor = L_bar;
        const MasterOutcome master =
            solve_master(instance, scenarios, params, encoded, big_m, pool, L_bar, mo, best_x.empty() ? last_x : best_x);
        const double L_j = std::max(master.result.lower_bound, L_bar);
        const double U_j = master.result.objective;
        if (L_j > L_bar) L_ell = std::max(L_ell, L_j);
        L_bar = U_j;
        last_x = master.x;

        // Step 2: true sample quantile at x^j
        const QuantileResult q = quantile_objective(instance, scenarios, master.x, params.tau);
        if (q.value < 0.0) throw ModelError("negative quantile cost at a master solution");
        if (q.value < U_bar) {
            U_bar = q.value;
            best_x = master.x;
        }

        // Step 3: exploitation or exploration
        const double ratio = std::isfinite(U_bar) && U_bar > 0.0 ? (U_bar - U_j) / U_bar : (U_bar == 0.0 ? 0.0 : 1.0);
        TraceRow row;
        row.iter = j;
        row.master_time = master.result.seconds;
        const bool pool_full = pool.size() >= vertex_count;
        if (ratio < params.eps_tilde || pool_full) {
            row.phase = "exploit";
            L_bar = L_ell;
            eps_mp *= params.alpha;
            if (kappa && params.beta) *kappa += *params.beta;
            ++res.exploitations;
        } else {
            row.phase = "explore";
            std::optional<std::size_t> idx_prime;
            if (!pool.empty()) {
                const solver::CoverModel cm = cover_master(instance, scenarios, params.tau, pool, L_bar);
                const std::vector<double> g = solver::cover_costs(cm, master.x);
                const double tol = 1e-6 * std::max(1.0, std::abs(U_j));
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (master.v[i] == 1 && std::abs(g[i] - U_j) <= tol) {
                        idx_prime = i;
                        break;
                    }
                if (!idx_prime) idx_prime = weighted_quantile(g, scenarios.weights, params.tau).index;
            }
            ASPDualVertex v = explore_vertex(instance, pool_ids, master.x, scenarios, q.index, idx_prime, rng);
            pool_ids.insert(v.partition);
            pool.push_back(std::move(v));
            ++res.explorations;
        }
        row.L_ell = L_ell;
        row.U_bar = U_bar;
        row.U_j = U_j;
        row.eps_mp = eps_mp;
        row.pool_size = pool.size();
        res.trace.push_back(row);
    }

    res.schedule.x = best_x;
    res.objective = U_bar;
    res.lower_bound = L_ell;
    res.gap = certified_gap(U_bar, L_ell);
    res.converged = res.gap <= params.eps;
    res.iterations = j;
    for (const auto& v : pool) res.pool.push_back(v.partition);
    res.seconds = elapsed();
    return res;
}

}  // namespace cqm
