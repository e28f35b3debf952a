#pragma once

// Single-server appointment scheduling: closed-form recourse, its dual and the
// interval-partition description of the dual vertices.

#include "cqm/twostage.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace cqm {

struct ASPInstance {
    std::size_t n = 0;
    std::vector<double> c_u;  // idle cost per slot
    std::vector<double> c_w;  // waiting cost per slot; c_w[0] is unused (the first client never waits)
    double c_o = 0.0;
    double T_h = 0.0;

    /// Nonnegative costs, c_u[i+1] - c_u[i] <= c_w[i+1], T_h > 0.
    void validate() const;

    /// c_u : c_w : c_o = 0.5 : 1 : 10 scaled by `unit`.
    static ASPInstance standard(std::size_t n, double T_h, double unit = 1.0);
};

struct Schedule {
    std::vector<double> x;
};

inline constexpr double kScheduleTol = 1e-9;

/// x >= 0 and sum x = T_h within kScheduleTol (scaled by T_h).
bool is_feasible(const ASPInstance& instance, const Schedule& schedule);

/// Blocks of consecutive indices covering {1, ..., n+1}. Bit k-1 of `cuts`
/// set means a block ends at k (k = 1..n).
struct IntervalPartition {
    std::size_t n = 0;
    std::uint64_t cuts = 0;

    /// 1-based inclusive (first, last) per block.
    std::vector<std::pair<std::size_t, std::size_t>> blocks() const;
    static IntervalPartition from_blocks(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& blocks);

    bool operator==(const IntervalPartition& o) const { return n == o.n && cuts == o.cuts; }
    bool operator<(const IntervalPartition& o) const { return n != o.n ? n < o.n : cuts < o.cuts; }
};

struct ASPDualVertex {
    std::vector<double> y;
    IntervalPartition partition;
};

struct RecursionResult {
    double cost = 0.0;
    std::vector<double> w;  // w_1..w_{n+1}; w_{n+1} is overtime
    std::vector<double> u;  // u_1..u_n
};

RecursionResult cost_recursion(const ASPInstance& instance, std::span<const double> x, std::span<const double> s);

/// Cost only; no allocation of the wait/idle vectors.
double recourse_cost(const ASPInstance& instance, std::span<const double> x, std::span<const double> s);

ASPDualVertex vertex_from_partition(const ASPInstance& instance, const IntervalPartition& partition);

/// Feasibility for the dual LP within 1e-9.
bool is_dual_feasible(const ASPInstance& instance, std::span<const double> y);

/// sum_i (s_i - x_i) y_i.
double asp_dual_value(std::span<const double> y, std::span<const double> x, std::span<const double> s);

/// All 2^n interval partitions, ordered by cut mask. n <= 12.
std::vector<IntervalPartition> enumerate_partitions(std::size_t n);

inline constexpr double kStrongDualityTol = 1e-6;

/// Optimal dual vertex from the busy periods of the recursion. Throws
/// DegenerateDual when neither the split nor the merged reading of
/// degenerate boundaries closes the duality gap.
ASPDualVertex busy_period_dual(const ASPInstance& instance, std::span<const double> x, std::span<const double> s);

/// Solves the dual LP and reads the partition off its optimal vertex.
ASPDualVertex lp_dual(const ASPInstance& instance, std::span<const double> x, std::span<const double> s);

/// busy_period_dual, falling back to lp_dual.
ASPDualVertex optimal_dual(const ASPInstance& instance, std::span<const double> x, std::span<const double> s);

/// Max Euclidean norm of y over all vertices. n <= 8.
double lipschitz_constant(const ASPInstance& instance);

/// y = (w_2..w_{n+1}, u_1..u_n); balance equalities as pairs of >= rows; X = {x >= 0, sum x = T_h}.
TwoStageLP to_two_stage(const ASPInstance& instance);

/// pi = (y+, y-) for the encoding above.
DualVertex to_two_stage_dual(const ASPDualVertex& vertex);

/// S * sum_i c_w_i + S * c_o + T_h * max c_u, S the largest total scenario duration.
/// Every c_w entry is summed, so the bound stays valid when c_w[0] is set.
double big_m_bound(const ASPInstance& instance, const ScenarioSet& scenarios);

/// LP of the recourse problem written out with explicit w, u (oracle for the recursion).
double recourse_lp_value(const ASPInstance& instance, std::span<const double> x, std::span<const double> s);

}  // namespace cqm
