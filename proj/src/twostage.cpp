#include "cqm/twostage.hpp"

#include "cqm/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <string>

namespace cqm {

using solver::kInf;
using solver::LpProblem;
using solver::Sense;
using solver::Term;

void ScenarioSet::validate() const {
    if (xi.empty()) throw InvalidArgument("ScenarioSet: no scenarios");
    if (weights.size() != xi.size()) throw InvalidArgument("ScenarioSet: one weight per scenario required");
    const std::size_t d = xi.front().size();
    for (const auto& s : xi) {
        if (s.size() != d) throw InvalidArgument("ScenarioSet: ragged scenario rows");
        for (double v : s)
            if (!std::isfinite(v)) throw InvalidArgument("ScenarioSet: non-finite entry");
    }
    validate_weights(weights);
}

void TwoStageLP::validate() const {
    const std::size_t m = h.size();
    if (T.size() != m || W.size() != m || C.size() != m)
        throw InvalidArgument("TwoStageLP: T, W, C and h must have the same number of rows");
    const std::size_t dx = dim_x(), dy = dim_y(), dxi = dim_xi();
    if (first_stage.upper.size() != dx) throw InvalidArgument("TwoStageLP: first-stage bound lengths differ");
    for (std::size_t r = 0; r < m; ++r) {
        if (T[r].size() != dx || W[r].size() != dy || C[r].size() != dxi)
            throw InvalidArgument("TwoStageLP: row " + std::to_string(r) + " has inconsistent width");
    }
    for (const auto& row : first_stage.rows)
        for (const Term& t : row.terms)
            if (t.var >= dx) throw InvalidArgument("TwoStageLP: first-stage row references an unknown variable");
}

bool is_dual_feasible(const TwoStageLP& problem, const DualVertex& v) {
    if (v.pi.size() != problem.num_rows()) return false;
    for (double p : v.pi)
        if (p < -kDualFeasTol) return false;
    for (std::size_t j = 0; j < problem.dim_y(); ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < problem.num_rows(); ++r) s += problem.W[r][j] * v.pi[r];
        if (s > problem.q[j] + kDualFeasTol) return false;
    }
    return true;
}

std::vector<double> recourse_rhs(const TwoStageLP& problem, const std::vector<double>& x,
                                 const std::vector<double>& xi) {
    if (x.size() != problem.dim_x() || xi.size() != problem.dim_xi())
        throw InvalidArgument("recourse_rhs: dimension mismatch");
    std::vector<double> rhs = problem.h;
    for (std::size_t r = 0; r < rhs.size(); ++r) {
        for (std::size_t c = 0; c < x.size(); ++c) rhs[r] -= problem.T[r][c] * x[c];
        for (std::size_t l = 0; l < xi.size(); ++l) rhs[r] -= problem.C[r][l] * xi[l];
    }
    return rhs;
}

RecourseSolution solve_recourse(const TwoStageLP& problem, const std::vector<double>& x,
                                const std::vector<double>& xi) {
    const std::vector<double> rhs = recourse_rhs(problem, x, xi);
    LpProblem lp;
    for (double c : problem.q) lp.add_variable(c);
    for (std::size_t r = 0; r < rhs.size(); ++r) {
        std::vector<Term> terms;
        for (std::size_t j = 0; j < problem.dim_y(); ++j)
            if (problem.W[r][j] != 0.0) terms.push_back({j, problem.W[r][j]});
        lp.add_row(std::move(terms), Sense::GreaterEqual, rhs[r]);
    }
    const solver::LpSolution sol = solver::lp_solve(lp);
    if (sol.status == solver::LpStatus::Infeasible) throw ModelError("recourse problem is infeasible");
    if (sol.status == solver::LpStatus::Unbounded) throw ModelError("recourse problem is unbounded");
    RecourseSolution out;
    out.value = sol.objective;
    out.y = sol.x;
    out.dual.pi = sol.duals;
    for (double& p : out.dual.pi) p = std::max(p, 0.0);
    return out;
}

double recourse_value(const TwoStageLP& problem, const std::vector<double>& x, const std::vector<double>& xi) {
    return solve_recourse(problem, x, xi).value;
}

double dual_value(const TwoStageLP& problem, const DualVertex& pi, const std::vector<double>& x,
                  const std::vector<double>& xi) {
    if (pi.pi.size() != problem.num_rows()) throw InvalidArgument("dual_value: pi has the wrong length");
    const std::vector<double> rhs = recourse_rhs(problem, x, xi);
    double v = 0.0;
    for (std::size_t r = 0; r < rhs.size(); ++r) v += rhs[r] * pi.pi[r];
    return v;
}

std::vector<double> QuantileMilp::x_of(const std::vector<double>& assignment) const {
    return {assignment.begin(), assignment.begin() + static_cast<std::ptrdiff_t>(dim_x)};
}

std::vector<int> QuantileMilp::v_of(const std::vector<double>& assignment) const {
    std::vector<int> v(num_scenarios);
    for (std::size_t i = 0; i < num_scenarios; ++i) v[i] = assignment[v_offset + i] > 0.5 ? 1 : 0;
    return v;
}

namespace {

// Shared prefix of both models: x with X's rows, t, the binaries and coverage.
QuantileMilp skeleton(const TwoStageLP& problem, const ScenarioSet& scenarios, double tau, double big_m,
                      double t_lower) {
    problem.validate();
    scenarios.validate();
    if (scenarios.dim() != problem.dim_xi()) throw InvalidArgument("scenario width differs from dim(xi)");
    if (!(tau > 0.0 && tau <= 1.0)) throw InvalidArgument("tau must lie in (0, 1]");
    if (!(big_m > 0.0) || !std::isfinite(big_m)) throw InvalidArgument("big-M must be positive and finite");

    QuantileMilp model;
    model.dim_x = problem.dim_x();
    model.num_scenarios = scenarios.size();
    model.big_m = big_m;
    model.tau = tau;
    model.weights = scenarios.weights;
    LpProblem& lp = model.milp.lp;
    for (std::size_t c = 0; c < model.dim_x; ++c)
        lp.add_variable(0.0, problem.first_stage.lower[c], problem.first_stage.upper[c], "x" + std::to_string(c + 1));
    for (const auto& row : problem.first_stage.rows) lp.rows.push_back(row);
    model.t_index = lp.add_variable(1.0, t_lower, kInf, "t");
    model.v_offset = lp.num_vars();
    std::vector<Term> cover;
    for (std::size_t i = 0; i < model.num_scenarios; ++i) {
        const std::size_t v = lp.add_variable(0.0, 0.0, 1.0, "v" + std::to_string(i + 1));
        model.milp.binaries.push_back(v);
        cover.push_back({v, scenarios.weights[i]});
    }
    lp.add_row(std::move(cover), Sense::GreaterEqual, tau, "coverage");
    return model;
}

}  // namespace

QuantileMilp build_direct_milp(const TwoStageLP& problem, const ScenarioSet& scenarios, double tau,
                               double big_m) {
    QuantileMilp model = skeleton(problem, scenarios, tau, big_m, -kInf);
    LpProblem& lp = model.milp.lp;
    const std::size_t m = problem.num_rows(), dy = problem.dim_y();
    for (std::size_t i = 0; i < model.num_scenarios; ++i) {
        const std::size_t y0 = lp.num_vars();
        for (std::size_t j = 0; j < dy; ++j)
            lp.add_variable(0.0, 0.0, kInf, "y" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
        for (std::size_t r = 0; r < m; ++r) {
            std::vector<Term> terms;
            for (std::size_t j = 0; j < dy; ++j)
                if (problem.W[r][j] != 0.0) terms.push_back({y0 + j, problem.W[r][j]});
            for (std::size_t c = 0; c < model.dim_x; ++c)
                if (problem.T[r][c] != 0.0) terms.push_back({c, problem.T[r][c]});
            double rhs = problem.h[r];
            for (std::size_t l = 0; l < problem.dim_xi(); ++l) rhs -= problem.C[r][l] * scenarios.xi[i][l];
            lp.add_row(std::move(terms), Sense::GreaterEqual, rhs,
                       "rec" + std::to_string(i + 1) + "_" + std::to_string(r + 1));
        }
        // q^T y^i - t <= M (1 - v_i)
        std::vector<Term> terms;
        for (std::size_t j = 0; j < dy; ++j)
            if (problem.q[j] != 0.0) terms.push_back({y0 + j, problem.q[j]});
        terms.push_back({model.t_index, -1.0});
        terms.push_back({model.v_offset + i, big_m});
        lp.add_row(std::move(terms), Sense::LessEqual, big_m, "cost" + std::to_string(i + 1));
    }
    return model;
}

QuantileMilp build_master(const TwoStageLP& problem, const ScenarioSet& scenarios, double tau, double big_m,
                          const std::vector<DualVertex>& pool, double floor) {
    QuantileMilp model = skeleton(problem, scenarios, tau, big_m, floor);
    LpProblem& lp = model.milp.lp;
    for (std::size_t k = 0; k < pool.size(); ++k) {
        const DualVertex& pi = pool[k];
        if (!is_dual_feasible(problem, pi)) throw InvalidArgument("build_master: pool vertex is not dual feasible");
        std::vector<double> tpi(model.dim_x, 0.0);
        for (std::size_t r = 0; r < problem.num_rows(); ++r)
            for (std::size_t c = 0; c < model.dim_x; ++c) tpi[c] += problem.T[r][c] * pi.pi[r];
        for (std::size_t i = 0; i < model.num_scenarios; ++i) {
            double rhs = 0.0;
            for (std::size_t r = 0; r < problem.num_rows(); ++r) {
                double hr = problem.h[r];
                for (std::size_t l = 0; l < problem.dim_xi(); ++l) hr -= problem.C[r][l] * scenarios.xi[i][l];
                rhs += pi.pi[r] * hr;
            }
            // t + pi^T T x - M v_i >= pi^T (h - C xi) - M
            std::vector<Term> terms{{model.t_index, 1.0}};
            for (std::size_t c = 0; c < model.dim_x; ++c)
                if (tpi[c] != 0.0) terms.push_back({c, tpi[c]});
            terms.push_back({model.v_offset + i, -big_m});
            lp.add_row(std::move(terms), Sense::GreaterEqual, rhs - big_m,
                       "cut" + std::to_string(k + 1) + "_" + std::to_string(i + 1));
        }
    }
    return model;
}

solver::CoverModel build_master_cover(const TwoStageLP& problem, const ScenarioSet& scenarios, double tau,
                                      const std::vector<DualVertex>& pool, double floor) {
    problem.validate();
    scenarios.validate();
    if (scenarios.dim() != problem.dim_xi()) throw InvalidArgument("scenario width differs from dim(xi)");
    solver::CoverModel cm;
    for (std::size_t c = 0; c < problem.dim_x(); ++c)
        cm.first_stage.add_variable(0.0, problem.first_stage.lower[c], problem.first_stage.upper[c]);
    cm.first_stage.rows = problem.first_stage.rows;
    cm.weights = scenarios.weights;
    cm.tau = tau;
    cm.floor = floor;
    cm.intercepts.assign(scenarios.size(), std::vector<double>(pool.size(), 0.0));
    for (std::size_t k = 0; k < pool.size(); ++k) {
        const DualVertex& pi = pool[k];
        if (!is_dual_feasible(problem, pi)) throw InvalidArgument("build_master_cover: pool vertex is not dual feasible");
        std::vector<double> slope(problem.dim_x(), 0.0);
        for (std::size_t r = 0; r < problem.num_rows(); ++r)
            for (std::size_t c = 0; c < slope.size(); ++c) slope[c] -= problem.T[r][c] * pi.pi[r];
        cm.slopes.push_back(std::move(slope));
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            double b = 0.0;
            for (std::size_t r = 0; r < problem.num_rows(); ++r) {
                double hr = problem.h[r];
                for (std::size_t l = 0; l < problem.dim_xi(); ++l) hr -= problem.C[r][l] * scenarios.xi[i][l];
                b += pi.pi[r] * hr;
            }
            cm.intercepts[i][k] = b;
        }
    }
    return cm;
}

std::string dump_json(const QuantileMilp& model) {
    using nlohmann::json;
    const LpProblem& lp = model.milp.lp;
    auto num = [](double v) -> json {
        if (v == kInf) return "inf";
        if (v == -kInf) return "-inf";
        return v;
    };
    json vars = json::array();
    std::vector<bool> is_bin(lp.num_vars(), false);
    for (std::size_t b : model.milp.binaries) is_bin[b] = true;
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        vars.push_back({{"name", lp.names[j]},
                        {"lower", num(lp.lower[j])},
                        {"upper", num(lp.upper[j])},
                        {"cost", lp.objective[j]},
                        {"binary", static_cast<bool>(is_bin[j])}});
    }
    json rows = json::array();
    for (const auto& row : lp.rows) {
        json terms = json::array();
        for (const Term& t : row.terms) terms.push_back({{"var", lp.names[t.var]}, {"coef", t.coef}});
        const char* sense = row.sense == Sense::LessEqual ? "<=" : row.sense == Sense::GreaterEqual ? ">=" : "=";
        rows.push_back({{"name", row.name}, {"terms", terms}, {"sense", sense}, {"rhs", row.rhs}});
    }
    json out = {{"big_m", model.big_m},  {"tau", model.tau},     {"weights", model.weights},
                {"variables", vars},     {"constraints", rows}};
    return out.dump(2);
}

}  // namespace cqm
