#include "cqm/quantile_bb.hpp"

#include "cqm/errors.hpp"
#include "cqm/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <queue>

namespace cqm::solver {

void CoverModel::validate() const {
    first_stage.validate();
    const std::size_t d = dim_x();
    for (const auto& a : slopes)
        if (a.size() != d) throw InvalidArgument("CoverModel: slope length differs from dim(x)");
    if (intercepts.size() != weights.size())
        throw InvalidArgument("CoverModel: one intercept row per scenario required");
    for (const auto& b : intercepts)
        if (b.size() != slopes.size()) throw InvalidArgument("CoverModel: intercept row length differs from cut count");
    validate_weights(weights);
    if (!(tau > 0.0 && tau <= 1.0)) throw InvalidArgument("CoverModel: tau must lie in (0, 1]");
    if (!std::isfinite(floor)) throw InvalidArgument("CoverModel: floor must be finite");
}

std::vector<double> cover_costs(const CoverModel& model, std::span<const double> x) {
    const std::size_t K = model.num_cuts();
    std::vector<double> ax(K);
    for (std::size_t k = 0; k < K; ++k) {
        double s = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) s += model.slopes[k][c] * x[c];
        ax[k] = s;
    }
    std::vector<double> g(model.num_scenarios(), -kInf);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& b = model.intercepts[i];
        double best = -kInf;
        for (std::size_t k = 0; k < K; ++k) best = std::max(best, ax[k] + b[k]);
        g[i] = best;
    }
    return g;
}

namespace {

constexpr double kCoverTol = 1e-12;

double quantile_of(const CoverModel& model, const std::vector<double>& g) {
    if (model.num_cuts() == 0) return model.floor;
    return std::max(model.floor, weighted_quantile(g, model.weights, model.tau).value);
}

// Scenario decisions along a branch, shared between siblings.
struct Fix {
    std::shared_ptr<const Fix> parent;
    std::uint32_t scenario;
    bool enforce;
};

struct Node {
    double bound;
    std::size_t id;
    std::shared_ptr<const Fix> fixes;
    std::vector<double> cut_rhs;  // max intercept over enforced scenarios, -inf if none
    double dropped_weight;
    bool evaluated;
    std::vector<double> x;  // relaxation optimum once evaluated
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    }
};

class CoverSearch {
public:
    CoverSearch(const CoverModel& model, const MilpOptions& options)
        : m_(model), opt_(options), status_(model.num_scenarios(), 0) {}

    MilpResult run();

private:
    struct NodeLp {
        bool feasible = false;
        double t = 0.0;
        std::vector<double> x;
    };

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    NodeLp solve_lp(const std::vector<double>& cut_rhs) const;
    void offer(const std::vector<double>& x, double value);
    void descend(std::vector<double> x);
    void mark(const std::shared_ptr<const Fix>& fixes, std::int8_t on);
    MilpResult finish(MilpStatus status, double open_bound);

    const CoverModel& m_;
    const MilpOptions& opt_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
    std::vector<std::int8_t> status_;  // 0 free, 1 enforced, 2 dropped
    MilpResult result_;
    std::vector<double> best_x_;
};

CoverSearch::NodeLp CoverSearch::solve_lp(const std::vector<double>& cut_rhs) const {
    LpProblem lp;
    const std::size_t d = m_.dim_x();
    for (std::size_t c = 0; c < d; ++c) lp.add_variable(0.0, m_.first_stage.lower[c], m_.first_stage.upper[c]);
    const std::size_t t = lp.add_variable(1.0, m_.floor, kInf);
    lp.rows = m_.first_stage.rows;
    for (std::size_t k = 0; k < cut_rhs.size(); ++k) {
        if (cut_rhs[k] == -kInf) continue;
        std::vector<Term> terms;
        terms.reserve(d + 1);
        terms.push_back({t, 1.0});
        for (std::size_t c = 0; c < d; ++c)
            if (m_.slopes[k][c] != 0.0) terms.push_back({c, -m_.slopes[k][c]});
        lp.add_row(std::move(terms), Sense::GreaterEqual, cut_rhs[k]);
    }
    const LpSolution sol = lp_solve(lp);
    NodeLp out;
    if (sol.status == LpStatus::Unbounded) throw SolverError("cover_solve: node relaxation unbounded");
    if (sol.status != LpStatus::Optimal) return out;
    out.feasible = true;
    out.t = sol.x[t];
    out.x.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(d));
    return out;
}

void CoverSearch::offer(const std::vector<double>& x, double value) {
    if (value < result_.objective) {
        result_.objective = value;
        best_x_ = x;
    }
}

// Enforce every scenario at or below the current quantile, re-optimise, repeat
// while the quantile keeps dropping.
void CoverSearch::descend(std::vector<double> x) {
    const std::size_t K = m_.num_cuts();
    for (int round = 0; round < 50; ++round) {
        const std::vector<double> g = cover_costs(m_, x);
        const double q = quantile_of(m_, g);
        std::vector<double> rhs(K, -kInf);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g[i] > q + 1e-9 * std::max(1.0, std::abs(q))) continue;
            for (std::size_t k = 0; k < K; ++k) rhs[k] = std::max(rhs[k], m_.intercepts[i][k]);
        }
        const NodeLp lp = solve_lp(rhs);
        if (!lp.feasible) return;
        const double next = quantile_of(m_, cover_costs(m_, lp.x));
        offer(lp.x, next);
        if (!(next < q - 1e-9 * std::max(1.0, std::abs(q)))) return;
        x = lp.x;
    }
}

void CoverSearch::mark(const std::shared_ptr<const Fix>& fixes, std::int8_t on) {
    for (const Fix* f = fixes.get(); f != nullptr; f = f->parent.get())
        status_[f->scenario] = on ? (f->enforce ? 1 : 2) : 0;
}

MilpResult CoverSearch::finish(MilpStatus status, double open_bound) {
    result_.status = status;
    result_.lower_bound = std::max(std::min(open_bound, result_.objective), m_.floor);
    result_.gap = relative_gap(result_.objective, result_.lower_bound);
    result_.seconds = elapsed();
    if (!best_x_.empty()) {
        const std::vector<double> g = cover_costs(m_, best_x_);
        std::vector<double> inc = best_x_;
        inc.push_back(result_.objective);
        const double tol = 1e-9 * std::max(1.0, std::abs(result_.objective));
        for (double gi : g) inc.push_back(gi <= result_.objective + tol ? 1.0 : 0.0);
        result_.incumbent = std::move(inc);
    }
    return result_;
}

MilpResult CoverSearch::run() {
    const std::size_t N = m_.num_scenarios();
    const std::size_t K = m_.num_cuts();
    const double budget = 1.0 - m_.tau + kCoverTol;

    const NodeLp root = solve_lp(std::vector<double>(K, -kInf));
    result_.node_count = 1;
    if (!root.feasible) {
        result_.status = MilpStatus::Infeasible;
        result_.seconds = elapsed();
        return result_;
    }
    offer(root.x, quantile_of(m_, cover_costs(m_, root.x)));
    if (m_.hint.size() == m_.dim_x()) descend(m_.hint);
    descend(root.x);

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    std::size_t next_id = 0;
    open.push(Node{root.t, next_id++, nullptr, std::vector<double>(K, -kInf), 0.0, false, {}});

    if (opt_.time_limit && *opt_.time_limit <= 0.0) return finish(MilpStatus::TimeLimit, root.t);

    std::vector<std::size_t> violated;
    while (!open.empty()) {
        const double best_open = open.top().bound;
        const double lb = std::max(std::min(best_open, result_.objective), m_.floor);
        if (relative_gap(result_.objective, lb) <= opt_.rel_gap) return finish(MilpStatus::GapReached, best_open);
        if (opt_.time_limit && elapsed() >= *opt_.time_limit) return finish(MilpStatus::TimeLimit, best_open);

        Node node = open.top();
        open.pop();
        const double prune_tol = 1e-12 * std::max(1.0, std::abs(result_.objective));
        if (node.bound >= result_.objective - prune_tol) continue;

        NodeLp lp;
        if (node.evaluated) {
            lp.feasible = true;
            lp.t = node.bound;
            lp.x = std::move(node.x);
        } else {
            lp = solve_lp(node.cut_rhs);
            ++result_.node_count;
            if (!lp.feasible) continue;
        }
        const double bound = std::max(node.bound, lp.t);
        if (bound >= result_.objective - prune_tol) continue;
        if (!node.evaluated && !open.empty() && bound > open.top().bound) {
            // cheaper nodes are waiting; come back with the exact bound
            node.bound = bound;
            node.evaluated = true;
            node.x = std::move(lp.x);
            open.push(std::move(node));
            continue;
        }

        const std::vector<double> g = cover_costs(m_, lp.x);
        const double here = quantile_of(m_, g);
        if (here < result_.objective) {
            offer(lp.x, here);
            descend(lp.x);
        }

        mark(node.fixes, 1);
        const double tol = 1e-9 * std::max(1.0, std::abs(lp.t));
        violated.clear();
        double violated_weight = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            if (status_[i] != 0 || !(g[i] > lp.t + tol)) continue;
            violated.push_back(i);
            violated_weight += m_.weights[i];
        }
        mark(node.fixes, 0);

        // enough mass is covered at the relaxation optimum, so nothing below it can beat `here`
        if (node.dropped_weight + violated_weight <= budget) continue;

        std::sort(violated.begin(), violated.end(), [&](std::size_t a, std::size_t b) {
            return g[a] > g[b] || (g[a] == g[b] && a < b);
        });
        // child j enforces violated[j] after dropping violated[0..j-1]
        std::shared_ptr<const Fix> chain = node.fixes;
        double dropped = node.dropped_weight;
        for (std::size_t j = 0; j < violated.size(); ++j) {
            const std::size_t s = violated[j];
            std::vector<double> rhs = node.cut_rhs;
            for (std::size_t k = 0; k < K; ++k) rhs[k] = std::max(rhs[k], m_.intercepts[s][k]);
            auto enforce = std::make_shared<const Fix>(Fix{chain, static_cast<std::uint32_t>(s), true});
            open.push(Node{bound, next_id++, std::move(enforce), std::move(rhs), dropped, false, {}});
            dropped += m_.weights[s];
            if (dropped > budget) break;
            chain = std::make_shared<const Fix>(Fix{chain, static_cast<std::uint32_t>(s), false});
        }
    }
    return finish(MilpStatus::Optimal, result_.objective);
}

}  // namespace

double cover_objective(const CoverModel& model, std::span<const double> x) {
    return quantile_of(model, cover_costs(model, x));
}

MilpResult cover_solve(const CoverModel& model, const MilpOptions& options) {
    model.validate();
    if (!(options.rel_gap > 0.0)) throw InvalidArgument("cover_solve: rel_gap must be positive");
    CoverSearch search(model, options);
    return search.run();
}

}  // namespace cqm::solver
