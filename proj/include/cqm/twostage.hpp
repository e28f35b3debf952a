#pragma once

// Generic two-stage LP  f(x, xi) = min { q^T y : W y >= h - T x - C xi, y >= 0 }
// and the quantile MILP models built on top of it.

#include "cqm/lp.hpp"
#include "cqm/milp.hpp"
#include "cqm/quantile_bb.hpp"
#include "cqm/scenario.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace cqm {

using Matrix = std::vector<std::vector<double>>;

/// Linear description of the first-stage feasible set X over x.
struct FirstStageSet {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<solver::Row> rows;
};

struct TwoStageLP {
    std::vector<double> q;
    Matrix T;  // m x dim(x)
    Matrix W;  // m x dim(y)
    Matrix C;  // m x dim(xi)
    std::vector<double> h;
    FirstStageSet first_stage;

    std::size_t num_rows() const { return h.size(); }
    std::size_t dim_x() const { return first_stage.lower.size(); }
    std::size_t dim_y() const { return q.size(); }
    std::size_t dim_xi() const { return C.empty() ? 0 : C.front().size(); }

    void validate() const;
};

struct DualVertex {
    std::vector<double> pi;
};

inline constexpr double kDualFeasTol = 1e-9;

/// pi >= 0 and W^T pi <= q within kDualFeasTol.
bool is_dual_feasible(const TwoStageLP& problem, const DualVertex& v);

/// h - T x - C xi.
std::vector<double> recourse_rhs(const TwoStageLP& problem, const std::vector<double>& x,
                                 const std::vector<double>& xi);

struct RecourseSolution {
    double value = 0.0;
    std::vector<double> y;
    DualVertex dual;
};

/// Solves the recourse LP. Throws ModelError when it is infeasible or unbounded.
RecourseSolution solve_recourse(const TwoStageLP& problem, const std::vector<double>& x,
                                const std::vector<double>& xi);

double recourse_value(const TwoStageLP& problem, const std::vector<double>& x,
                      const std::vector<double>& xi);

/// (h - T x - C xi)^T pi.
double dual_value(const TwoStageLP& problem, const DualVertex& pi, const std::vector<double>& x,
                  const std::vector<double>& xi);

/// A quantile MILP with variable layout [x, t, v, y^1, ..., y^N] (recourse copies
/// only for the direct model).
struct QuantileMilp {
    solver::MilpProblem milp;
    std::size_t dim_x = 0;
    std::size_t t_index = 0;
    std::size_t v_offset = 0;
    std::size_t num_scenarios = 0;
    double big_m = 0.0;
    double tau = 0.0;
    std::vector<double> weights;

    std::vector<double> x_of(const std::vector<double>& assignment) const;
    std::vector<int> v_of(const std::vector<double>& assignment) const;
};

QuantileMilp build_direct_milp(const TwoStageLP& problem, const ScenarioSet& scenarios, double tau,
                               double big_m);

/// Master over a vertex pool: v_i = 1 forces t >= pi^T (h - T x - C xi^i) for
/// every pi in the pool; t >= floor.
QuantileMilp build_master(const TwoStageLP& problem, const ScenarioSet& scenarios, double tau,
                          double big_m, const std::vector<DualVertex>& pool, double floor);

/// The same master in the form consumed by the quantile-cover engine.
solver::CoverModel build_master_cover(const TwoStageLP& problem, const ScenarioSet& scenarios,
                                      double tau, const std::vector<DualVertex>& pool, double floor);

/// JSON debug dump: variables, constraints, M.
std::string dump_json(const QuantileMilp& model);

}  // namespace cqm
