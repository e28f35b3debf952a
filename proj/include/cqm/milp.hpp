#pragma once

// Branch-and-bound MILP engine over binary variables with LP relaxations.

#include "cqm/lp.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace cqm::solver {

struct MilpProblem {
    LpProblem lp;
    /// Indices of variables restricted to {0, 1}. Their LP bounds must lie within [0, 1].
    std::vector<std::size_t> binaries;
};

enum class MilpStatus { Optimal, GapReached, TimeLimit, Infeasible, Unbounded };

struct MilpOptions {
    /// Relative gap target (incumbent - bound) / max(|incumbent|, 1e-9).
    double rel_gap = 1e-6;
    /// Wall-clock seconds; checked between node solves.
    std::optional<double> time_limit;
    /// Known valid lower bound on the objective; the reported bound never drops below it.
    std::optional<double> floor;
    double integrality_tol = 1e-6;
    /// Node-selection seed. The engine is deterministic; the seed is recorded for replay only.
    unsigned seed = 0;
};

struct MilpResult {
    MilpStatus status = MilpStatus::Infeasible;
    std::optional<std::vector<double>> incumbent;
    double objective = kInf;   // incumbent objective, +inf without one
    double lower_bound = -kInf;
    double gap = kInf;         // relative gap at termination
    std::size_t node_count = 0;
    double seconds = 0.0;
};

inline constexpr double kGapDenominatorFloor = 1e-9;

double relative_gap(double incumbent, double lower_bound);

/// Best-bound-first branch and bound; branches on the most fractional binary
/// (ties by lowest index). Stops on gap, time limit, or exhaustion.
MilpResult milp_solve(const MilpProblem& problem, const MilpOptions& options = {});

const char* to_string(MilpStatus status);

}  // namespace cqm::solver
