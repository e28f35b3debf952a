#include "cqm/asp.hpp"

#include "cqm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cqm {

using solver::kInf;
using solver::LpProblem;
using solver::Sense;
using solver::Term;

void ASPInstance::validate() const {
    if (n == 0) throw InvalidArgument("ASPInstance: n must be positive");
    if (c_u.size() != n || c_w.size() != n)
        throw InvalidArgument("ASPInstance: c_u and c_w need one entry per slot");
    for (std::size_t i = 0; i < n; ++i)
        if (!(c_u[i] >= 0.0) || !(c_w[i] >= 0.0)) throw InvalidArgument("ASPInstance: costs must be nonnegative");
    if (!(c_o >= 0.0)) throw InvalidArgument("ASPInstance: overtime cost must be nonnegative");
    if (!(T_h > 0.0) || !std::isfinite(T_h)) throw InvalidArgument("ASPInstance: horizon must be positive");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (c_u[i + 1] - c_u[i] > c_w[i + 1] + 1e-12)
            throw InvalidArgument("ASPInstance: idle-cost increase exceeds waiting cost at slot " + std::to_string(i + 2));
}

ASPInstance ASPInstance::standard(std::size_t n, double T_h, double unit) {
    ASPInstance inst;
    inst.n = n;
    inst.c_u.assign(n, 0.5 * unit);
    inst.c_w.assign(n, 1.0 * unit);
    inst.c_o = 10.0 * unit;
    inst.T_h = T_h;
    return inst;
}

bool is_feasible(const ASPInstance& instance, const Schedule& schedule) {
    if (schedule.x.size() != instance.n) return false;
    double total = 0.0;
    for (double v : schedule.x) {
        if (!(v >= -kScheduleTol)) return false;
        total += v;
    }
    return std::abs(total - instance.T_h) <= kScheduleTol * std::max(1.0, instance.T_h);
}

std::vector<std::pair<std::size_t, std::size_t>> IntervalPartition::blocks() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t first = 1;
    for (std::size_t k = 1; k <= n; ++k) {
        if (cuts >> (k - 1) & 1u) {
            out.emplace_back(first, k);
            first = k + 1;
        }
    }
    out.emplace_back(first, n + 1);
    return out;
}

IntervalPartition IntervalPartition::from_blocks(std::size_t n,
                                                 const std::vector<std::pair<std::size_t, std::size_t>>& blocks) {
    if (n > 63) throw InvalidArgument("IntervalPartition: n too large");
    IntervalPartition p{n, 0};
    std::size_t expect = 1;
    for (const auto& [first, last] : blocks) {
        if (first != expect || last < first || last > n + 1)
            throw InvalidArgument("IntervalPartition: blocks must be consecutive and cover {1..n+1}");
        if (last <= n) p.cuts |= std::uint64_t{1} << (last - 1);
        expect = last + 1;
    }
    if (expect != n + 2) throw InvalidArgument("IntervalPartition: blocks must end at n+1");
    return p;
}

namespace {

void check_inputs(const ASPInstance& instance, std::span<const double> x, std::span<const double> s) {
    if (x.size() != instance.n || s.size() != instance.n)
        throw InvalidArgument("appointment vectors must have length n");
    for (double v : s)
        if (!(v >= 0.0)) throw InvalidArgument("durations must be nonnegative");
}

}  // namespace

RecursionResult cost_recursion(const ASPInstance& instance, std::span<const double> x, std::span<const double> s) {
    check_inputs(instance, x, s);
    const std::size_t n = instance.n;
    RecursionResult r;
    r.w.assign(n + 1, 0.0);
    r.u.assign(n, 0.0);
    for (std::size_t i = 1; i <= n; ++i) {
        // slot i hands over to i+1 (0-based: w[i] is w_{i+1})
        const double slack = s[i - 1] + r.w[i - 1] - x[i - 1];
        r.w[i] = std::max(slack, 0.0);
        r.u[i - 1] = std::max(-slack, 0.0);
    }
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) cost += instance.c_u[i] * r.u[i];
    for (std::size_t i = 1; i < n; ++i) cost += instance.c_w[i] * r.w[i];
    cost += instance.c_o * r.w[n];
    r.cost = cost;
    return r;
}

double recourse_cost(const ASPInstance& instance, std::span<const double> x, std::span<const double> s) {
    const std::size_t n = instance.n;
    double wait = 0.0, cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double slack = s[i] + wait - x[i];
        if (slack > 0.0) {
            wait = slack;
            cost += (i + 1 < n ? instance.c_w[i + 1] : instance.c_o) * wait;
        } else {
            wait = 0.0;
            cost -= instance.c_u[i] * slack;
        }
    }
    return cost;
}

ASPDualVertex vertex_from_partition(const ASPInstance& instance, const IntervalPartition& partition) {
    const std::size_t n = instance.n;
    if (partition.n != n) throw InvalidArgument("vertex_from_partition: partition size differs from n");
    ASPDualVertex v;
    v.partition = partition;
    v.y.assign(n, 0.0);
    for (const auto& [first, last] : partition.blocks()) {
        // walk the block backwards accumulating c_w
        double acc = last <= n ? -instance.c_u[last - 1] : instance.c_o;
        const std::size_t top = std::min(last, n);
        for (std::size_t i = top; i >= first; --i) {
            if (i < top) acc += instance.c_w[i];  // c_w_{i+1}
            v.y[i - 1] = acc;
            if (i == 1) break;
        }
    }
    return v;
}

bool is_dual_feasible(const ASPInstance& instance, std::span<const double> y) {
    const std::size_t n = instance.n;
    constexpr double tol = 1e-9;
    if (y.size() != n) return false;
    if (y[n - 1] < -instance.c_u[n - 1] - tol || y[n - 1] > instance.c_o + tol) return false;
    for (std::size_t i = 1; i < n; ++i) {
        if (y[i - 1] < -instance.c_u[i - 1] - tol) return false;
        if (y[i - 1] > y[i] + instance.c_w[i] + tol) return false;
    }
    return true;
}

double asp_dual_value(std::span<const double> y, std::span<const double> x, std::span<const double> s) {
    double v = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) v += (s[i] - x[i]) * y[i];
    return v;
}

std::vector<IntervalPartition> enumerate_partitions(std::size_t n) {
    if (n == 0 || n > 12) throw InvalidArgument("enumerate_partitions: n must lie in [1, 12]");
    std::vector<IntervalPartition> out;
    out.reserve(std::size_t{1} << n);
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) out.push_back({n, m});
    return out;
}

namespace {

bool closes_gap(const ASPDualVertex& v, std::span<const double> x, std::span<const double> s, double cost) {
    return std::abs(asp_dual_value(v.y, x, s) - cost) <= kStrongDualityTol * std::max(1.0, std::abs(cost));
}

}  // namespace

ASPDualVertex busy_period_dual(const ASPInstance& instance, std::span<const double> x, std::span<const double> s) {
    const RecursionResult r = cost_recursion(instance, x, s);
    const std::size_t n = instance.n;
    constexpr double tol = 1e-9;
    std::uint64_t cuts = 0, degenerate = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        // k and k+1 share a block while the server stays busy across the boundary
        if (r.w[k] > tol) continue;
        cuts |= std::uint64_t{1} << (k - 1);
        if (r.u[k - 1] <= tol) degenerate |= std::uint64_t{1} << (k - 1);
    }
    ASPDualVertex v = vertex_from_partition(instance, {n, cuts});
    if (closes_gap(v, x, s, r.cost)) return v;
    if (degenerate != 0) {
        v = vertex_from_partition(instance, {n, cuts & ~degenerate});
        if (closes_gap(v, x, s, r.cost)) return v;
    }
    throw DegenerateDual("busy-period partition leaves a duality gap");
}

ASPDualVertex lp_dual(const ASPInstance& instance, std::span<const double> x, std::span<const double> s) {
    check_inputs(instance, x, s);
    const std::size_t n = instance.n;
    LpProblem lp;
    for (std::size_t i = 0; i < n; ++i)
        lp.add_variable(-(s[i] - x[i]), -instance.c_u[i], i + 1 == n ? instance.c_o : kInf);
    for (std::size_t i = 1; i < n; ++i)
        lp.add_row({{i - 1, 1.0}, {i, -1.0}}, Sense::LessEqual, instance.c_w[i]);
    const solver::LpSolution sol = solver::lp_solve(lp);
    if (sol.status != solver::LpStatus::Optimal) throw SolverError("dual LP did not solve to optimality");

    constexpr double tol = 1e-7;
    const std::vector<double>& y = sol.x;
    std::uint64_t cuts = 0;
    for (std::size_t i = n; i >= 1; --i) {
        const double up = i == n ? instance.c_o : y[i] + instance.c_w[i];
        const double scale = std::max(1.0, std::abs(up));
        if (std::abs(y[i - 1] - up) <= tol * scale) {
            // continues the block to the right
        } else if (std::abs(y[i - 1] + instance.c_u[i - 1]) <= tol * scale) {
            cuts |= std::uint64_t{1} << (i - 1);
        } else {
            throw DegenerateDual("dual LP optimum is not an interval-partition vertex");
        }
    }
    ASPDualVertex v = vertex_from_partition(instance, {n, cuts});
    const double cost = recourse_cost(instance, x, s);
    if (!closes_gap(v, x, s, cost)) throw DegenerateDual("dual LP vertex fails the strong-duality check");
    return v;
}

ASPDualVertex optimal_dual(const ASPInstance& instance, std::span<const double> x, std::span<const double> s) {
    try {
        return busy_period_dual(instance, x, s);
    } catch (const DegenerateDual&) {
        return lp_dual(instance, x, s);
    }
}

double lipschitz_constant(const ASPInstance& instance) {
    if (instance.n > 8) throw InvalidArgument("lipschitz_constant: n must be at most 8");
    double best = 0.0;
    for (const IntervalPartition& p : enumerate_partitions(instance.n)) {
        const ASPDualVertex v = vertex_from_partition(instance, p);
        double sq = 0.0;
        for (double yi : v.y) sq += yi * yi;
        best = std::max(best, std::sqrt(sq));
    }
    return best;
}

TwoStageLP to_two_stage(const ASPInstance& instance) {
    instance.validate();
    const std::size_t n = instance.n;
    TwoStageLP p;
    // y = (w_2..w_{n+1}, u_1..u_n)
    for (std::size_t i = 1; i < n; ++i) p.q.push_back(instance.c_w[i]);
    p.q.push_back(instance.c_o);
    for (std::size_t i = 0; i < n; ++i) p.q.push_back(instance.c_u[i]);
    const std::size_t m = 2 * n, dy = 2 * n;
    p.T.assign(m, std::vector<double>(n, 0.0));
    p.W.assign(m, std::vector<double>(dy, 0.0));
    p.C.assign(m, std::vector<double>(n, 0.0));
    p.h.assign(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        // w_{i+2} - w_{i+1} - u_{i+1} = s_{i+1} - x_{i+1}   (0-based slot i)
        std::vector<double> e(dy, 0.0);
        e[i] = 1.0;
        if (i > 0) e[i - 1] = -1.0;
        e[n + i] = -1.0;
        const std::size_t a = 2 * i, b = 2 * i + 1;
        for (std::size_t j = 0; j < dy; ++j) {
            p.W[a][j] = e[j];
            p.W[b][j] = -e[j];
        }
        p.T[a][i] = 1.0;
        p.C[a][i] = -1.0;
        p.T[b][i] = -1.0;
        p.C[b][i] = 1.0;
    }
    p.first_stage.lower.assign(n, 0.0);
    p.first_stage.upper.assign(n, kInf);
    std::vector<Term> sum;
    for (std::size_t i = 0; i < n; ++i) sum.push_back({i, 1.0});
    p.first_stage.rows.push_back({std::move(sum), Sense::Equal, instance.T_h, "horizon"});
    return p;
}

DualVertex to_two_stage_dual(const ASPDualVertex& vertex) {
    DualVertex d;
    for (double y : vertex.y) {
        d.pi.push_back(std::max(y, 0.0));
        d.pi.push_back(std::max(-y, 0.0));
    }
    return d;
}

double big_m_bound(const ASPInstance& instance, const ScenarioSet& scenarios) {
    instance.validate();
    double S = 0.0;
    for (const auto& s : scenarios.xi) {
        double tot = 0.0;
        for (double v : s) tot += v;
        S = std::max(S, tot);
    }
    double sum_cw = 0.0;
    for (double c : instance.c_w) sum_cw += c;
    const double max_cu = *std::max_element(instance.c_u.begin(), instance.c_u.end());
    return S * sum_cw + S * instance.c_o + instance.T_h * max_cu;
}

double recourse_lp_value(const ASPInstance& instance, std::span<const double> x, std::span<const double> s) {
    check_inputs(instance, x, s);
    const std::size_t n = instance.n;
    LpProblem lp;
    // w_1..w_{n+1} then u_1..u_n
    for (std::size_t i = 0; i <= n; ++i) {
        const double c = i == 0 ? 0.0 : i < n ? instance.c_w[i] : instance.c_o;
        lp.add_variable(c, 0.0, i == 0 ? 0.0 : kInf);
    }
    for (std::size_t i = 0; i < n; ++i) lp.add_variable(instance.c_u[i]);
    for (std::size_t i = 1; i <= n; ++i) {
        // w_{i+1} - u_i - w_i = s_i - x_i
        lp.add_row({{i, 1.0}, {n + i, -1.0}, {i - 1, -1.0}}, Sense::Equal, s[i - 1] - x[i - 1]);
    }
    const solver::LpSolution sol = solver::lp_solve(lp);
    if (sol.status != solver::LpStatus::Optimal) throw ModelError("appointment recourse LP did not solve");
    return sol.objective;
}

}  // namespace cqm
