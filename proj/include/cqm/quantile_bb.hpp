#pragma once

// Branch and bound specialised to quantile masters:
//   min t  s.t.  x in X, t >= floor, sum_i w_i v_i >= tau,
//                v_i = 1  =>  t >= a_k^T x + b_ik  for every cut k.
// Nodes carry sets of enforced and dropped scenarios; the node LP lives in
// (x, t) only, so its size depends on the number of cuts, not on N.

#include "cqm/lp.hpp"
#include "cqm/milp.hpp"

#include <span>
#include <vector>

namespace cqm::solver {

struct CoverModel {
    /// Rows and bounds describing X; the objective is ignored.
    LpProblem first_stage;
    /// slopes[k] = a_k, one per cut.
    std::vector<std::vector<double>> slopes;
    /// intercepts[i][k] = b_ik.
    std::vector<std::vector<double>> intercepts;
    std::vector<double> weights;
    double tau = 0.95;
    /// Must be finite.
    double floor = 0.0;
    /// Optional starting point for the primal heuristic (empty = none).
    std::vector<double> hint;

    std::size_t dim_x() const { return first_stage.num_vars(); }
    std::size_t num_scenarios() const { return weights.size(); }
    std::size_t num_cuts() const { return slopes.size(); }

    void validate() const;
};

/// g_i(x) = max_k a_k^T x + b_ik (-inf without cuts).
std::vector<double> cover_costs(const CoverModel& model, std::span<const double> x);

/// max(floor, weighted tau-quantile of g(x)).
double cover_objective(const CoverModel& model, std::span<const double> x);

/// Result incumbent layout is [x, t, v]. Same status and bound contract as milp_solve.
MilpResult cover_solve(const CoverModel& model, const MilpOptions& options = {});

}  // namespace cqm::solver
