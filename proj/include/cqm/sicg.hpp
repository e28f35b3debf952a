#pragma once

// Stochastic inexact constraint generation for quantile appointment scheduling.

#include "cqm/asp.hpp"
#include "cqm/scenario.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace cqm {

enum class MasterEngine {
    Cover,  // quantile-cover branch and bound over (x, t)
    Dense   // generic big-M MILP branch and bound
};

struct SiCGParams {
    double eps = 0.02;          // termination gap
    double eps_tilde = 0.015;   // exploitation threshold, must be < eps / (1 + eps)
    double eps_mp0 = 0.05;      // initial master gap
    double alpha = 0.5;         // master gap shrink factor
    std::optional<double> kappa = 30.0;  // master time limit (s)
    std::optional<double> beta = 60.0;   // time-limit increment on exploitation (s)
    double tau = 0.95;
    std::uint64_t seed = 0;
    /// Defaults to 10 * 2^n + 1000.
    std::optional<std::size_t> max_iterations;
    /// Wall-clock budget for the whole run; on expiry the best schedule so far
    /// is returned with its (uncertified) gap.
    std::optional<double> total_time_limit;
    /// Overrides big_m_bound for the dense engine.
    std::optional<double> big_m;
    MasterEngine engine = MasterEngine::Cover;

    void validate() const;
};

struct TraceRow {
    std::size_t iter = 0;
    std::string phase;  // "explore" or "exploit"
    double L_ell = 0.0;
    double U_bar = 0.0;
    double U_j = 0.0;
    double eps_mp = 0.0;
    std::size_t pool_size = 0;
    double master_time = 0.0;
};

struct SiCGResult {
    Schedule schedule;
    double objective = 0.0;    // U-bar: true quantile of the returned schedule
    double lower_bound = 0.0;  // L^ell
    double gap = 0.0;          // (U-bar - L^ell) / U-bar
    bool converged = false;
    std::size_t iterations = 0;
    std::size_t explorations = 0;
    std::size_t exploitations = 0;
    std::vector<IntervalPartition> pool;
    std::vector<TraceRow> trace;
    double seconds = 0.0;
};

/// (U - L) / U, 0 when U == 0, +inf when U is infinite.
double certified_gap(double upper, double lower);

SiCGResult sicg_solve(const ASPInstance& instance, const ScenarioSet& scenarios, const SiCGParams& params);

/// A dual vertex outside `pool`: the optimal dual of scenario idx at x, then of
/// idx_prime, then uniformly random partitions, then a deterministic sweep.
ASPDualVertex explore_vertex(const ASPInstance& instance, const std::set<IntervalPartition>& pool,
                             std::span<const double> x, const ScenarioSet& scenarios, std::size_t idx,
                             std::optional<std::size_t> idx_prime, std::mt19937_64& rng);

/// Header `iter,phase,L_ell,U_bar,U_j,eps_mp,pool_size,master_time`.
std::string trace_csv(const std::vector<TraceRow>& trace);

/// Weighted tau-quantile of recourse costs at x (the true sample objective).
QuantileResult quantile_objective(const ASPInstance& instance, const ScenarioSet& scenarios,
                                  std::span<const double> x, double tau);

}  // namespace cqm
