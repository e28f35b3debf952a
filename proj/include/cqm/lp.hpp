#pragma once

// Embedded LP engine: dense bounded-variable primal simplex.

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace cqm::solver {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, GreaterEqual, Equal };

struct Term {
    std::size_t var;
    double coef;
};

struct Row {
    std::vector<Term> terms;
    Sense sense = Sense::GreaterEqual;
    double rhs = 0.0;
    std::string name;
};

/// min c^T x  s.t.  rows, lower <= x <= upper.
struct LpProblem {
    std::vector<double> objective;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::string> names;
    std::vector<Row> rows;

    std::size_t add_variable(double cost, double lb = 0.0, double ub = kInf, std::string name = {});
    std::size_t add_row(std::vector<Term> terms, Sense sense, double rhs, std::string name = {});

    std::size_t num_vars() const { return objective.size(); }
    std::size_t num_rows() const { return rows.size(); }

    /// Throws InvalidArgument on dimension or finiteness problems.
    void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
    /// Row multipliers; >= 0 for GreaterEqual rows, <= 0 for LessEqual rows.
    std::vector<double> duals;
    std::size_t iterations = 0;
};

struct LpOptions {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-11;
    /// 0 selects 50 * (rows + cols) + 1000.
    std::size_t max_iterations = 0;
    std::size_t max_refactorizations = 3;
};

/// Deterministic for fixed input (Dantzig pricing, Bland after a run of
/// 2 * (rows + cols) degenerate pivots). Throws NumericalError when the
/// iteration cap is hit or residuals stay large after reinversion.
LpSolution lp_solve(const LpProblem& problem, const LpOptions& options = {});

/// CPLEX-LP text of `problem`, for cross-checking with an external solver.
std::string to_lp_format(const LpProblem& problem, const std::vector<std::size_t>& integer_vars = {});

const char* to_string(LpStatus status);

}  // namespace cqm::solver
