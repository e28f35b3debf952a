#include "cqm/milp.hpp"

#include "cqm/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>

namespace cqm::solver {

double relative_gap(double incumbent, double lower_bound) {
    if (!std::isfinite(incumbent)) return kInf;
    if (!std::isfinite(lower_bound)) return kInf;
    return std::max(0.0, incumbent - lower_bound) / std::max(std::abs(incumbent), kGapDenominatorFloor);
}

const char* to_string(MilpStatus status) {
    switch (status) {
        case MilpStatus::Optimal: return "Optimal";
        case MilpStatus::GapReached: return "GapReached";
        case MilpStatus::TimeLimit: return "TimeLimit";
        case MilpStatus::Infeasible: return "Infeasible";
        case MilpStatus::Unbounded: return "Unbounded";
    }
    return "?";
}

namespace {

struct Node {
    double bound;
    std::size_t id;
    std::vector<std::pair<std::size_t, double>> fixings;
    std::vector<double> x;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    }
};

}  // namespace

MilpResult milp_solve(const MilpProblem& problem, const MilpOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    problem.lp.validate();
    if (!(options.rel_gap > 0.0)) throw InvalidArgument("milp_solve: rel_gap must be positive");
    for (std::size_t b : problem.binaries) {
        if (b >= problem.lp.num_vars()) throw InvalidArgument("milp_solve: binary index out of range");
        if (problem.lp.lower[b] < 0.0 || problem.lp.upper[b] > 1.0)
            throw InvalidArgument("milp_solve: binary variable bounds must lie within [0, 1]");
    }
    const double floor = options.floor.value_or(-kInf);

    MilpResult result;
    LpProblem work = problem.lp;

    auto solve_node = [&](const std::vector<std::pair<std::size_t, double>>& fixings) {
        for (std::size_t b : problem.binaries) {
            work.lower[b] = problem.lp.lower[b];
            work.upper[b] = problem.lp.upper[b];
        }
        for (const auto& [var, val] : fixings) work.lower[var] = work.upper[var] = val;
        return lp_solve(work);
    };

    auto finish = [&](MilpStatus status, double open_bound) {
        result.status = status;
        double lb = std::min(open_bound, result.objective);
        result.lower_bound = std::max(lb, floor);
        if (result.incumbent) result.lower_bound = std::min(result.lower_bound, result.objective);
        result.gap = relative_gap(result.objective, result.lower_bound);
        result.seconds = elapsed();
        return result;
    };

    const LpSolution root = solve_node({});
    result.node_count = 1;
    if (root.status == LpStatus::Infeasible) {
        result.status = MilpStatus::Infeasible;
        result.seconds = elapsed();
        return result;
    }
    if (root.status == LpStatus::Unbounded) {
        result.status = MilpStatus::Unbounded;
        result.seconds = elapsed();
        return result;
    }

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    std::size_t next_id = 0;
    open.push(Node{root.objective, next_id++, {}, root.x});

    if (options.time_limit && *options.time_limit <= 0.0) return finish(MilpStatus::TimeLimit, root.objective);

    while (!open.empty()) {
        const double best_open = open.top().bound;
        if (result.incumbent) {
            const double lb = std::max(std::min(best_open, result.objective), floor);
            if (relative_gap(result.objective, lb) <= options.rel_gap) return finish(MilpStatus::GapReached, best_open);
        }
        if (options.time_limit && elapsed() >= *options.time_limit) return finish(MilpStatus::TimeLimit, best_open);

        Node node = open.top();
        open.pop();
        if (result.incumbent && node.bound >= result.objective - 1e-12 * std::max(1.0, std::abs(result.objective)))
            continue;

        // most fractional binary, ties by lowest index
        std::size_t branch_var = problem.lp.num_vars();
        double best_frac = -1.0;
        for (std::size_t b : problem.binaries) {
            const double v = node.x[b];
            const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
            if (frac <= options.integrality_tol) continue;
            const double score = 0.5 - std::abs(v - std::floor(v) - 0.5);
            if (score > best_frac || (score == best_frac && b < branch_var)) {
                best_frac = score;
                branch_var = b;
            }
        }
        if (branch_var == problem.lp.num_vars()) {
            if (node.bound < result.objective) {
                std::vector<double> x = node.x;
                for (std::size_t b : problem.binaries) x[b] = std::round(x[b]);
                result.incumbent = std::move(x);
                result.objective = node.bound;
            }
            continue;
        }

        for (double val : {0.0, 1.0}) {
            auto fixings = node.fixings;
            fixings.emplace_back(branch_var, val);
            const LpSolution child = solve_node(fixings);
            ++result.node_count;
            if (child.status != LpStatus::Optimal) continue;
            if (result.incumbent && child.objective >= result.objective) continue;
            open.push(Node{std::max(child.objective, node.bound), next_id++, std::move(fixings), child.x});
        }
    }

    if (!result.incumbent) {
        result.status = MilpStatus::Infeasible;
        result.seconds = elapsed();
        return result;
    }
    return finish(MilpStatus::Optimal, result.objective);
}

}  // namespace cqm::solver
