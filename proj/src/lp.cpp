#include "cqm/lp.hpp"

#include "cqm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cqm::solver {

std::size_t LpProblem::add_variable(double cost, double lb, double ub, std::string name) {
    objective.push_back(cost);
    lower.push_back(lb);
    upper.push_back(ub);
    names.push_back(std::move(name));
    return objective.size() - 1;
}

std::size_t LpProblem::add_row(std::vector<Term> terms, Sense sense, double rhs, std::string name) {
    rows.push_back(Row{std::move(terms), sense, rhs, std::move(name)});
    return rows.size() - 1;
}

void LpProblem::validate() const {
    const std::size_t n = objective.size();
    if (lower.size() != n || upper.size() != n)
        throw InvalidArgument("LpProblem: bound vectors do not match the objective length");
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(objective[j])) throw InvalidArgument("LpProblem: non-finite objective coefficient");
        if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] == kInf || upper[j] == -kInf)
            throw InvalidArgument("LpProblem: malformed bounds");
    }
    for (const Row& row : rows) {
        if (!std::isfinite(row.rhs)) throw InvalidArgument("LpProblem: non-finite right-hand side");
        for (const Term& t : row.terms) {
            if (t.var >= n) throw InvalidArgument("LpProblem: row references an unknown variable");
            if (!std::isfinite(t.coef)) throw InvalidArgument("LpProblem: non-finite coefficient");
        }
    }
}

const char* to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal: return "Optimal";
        case LpStatus::Infeasible: return "Infeasible";
        case LpStatus::Unbounded: return "Unbounded";
    }
    return "?";
}

namespace {

enum class VarMap { Shift, Flip, Split };

struct VarTransform {
    VarMap kind;
    std::size_t col;
    std::size_t col2;  // Split only
    double offset;     // l for Shift, u for Flip
};

// min cost^T z  s.t.  A z = b, 0 <= z <= ub, with b >= 0 and a unit column per row.
class Simplex {
public:
    Simplex(const LpProblem& problem, const LpOptions& options) : p_(problem), opt_(options) { build(); }

    LpSolution run();

private:
    enum class Outcome { Optimal, Unbounded };

    void build();
    void reinvert();
    void compute_reduced_costs(const std::vector<double>& cost);
    Outcome iterate(const std::vector<double>& cost);
    void pivot(std::size_t r, std::size_t j);
    double residual() const;
    std::vector<double> column_values() const;

    double& tab(std::size_t r, std::size_t c) { return tab_[r * n_ + c]; }
    double tab(std::size_t r, std::size_t c) const { return tab_[r * n_ + c]; }

    const LpProblem& p_;
    LpOptions opt_;

    std::size_t m_ = 0, n_ = 0;
    std::vector<VarTransform> vars_;
    std::vector<double> a_;  // original standard-form matrix, m x n
    std::vector<double> b_;
    std::vector<double> ub_;
    std::vector<double> cost2_;
    std::vector<char> artificial_;
    std::vector<char> barred_;
    std::vector<double> row_sign_;
    std::vector<std::size_t> unit_col_;

    std::vector<double> tab_;   // m x n, B^{-1} A
    std::vector<double> beta_;  // basic values
    std::vector<double> d_;     // reduced costs
    std::vector<std::size_t> basis_;
    std::vector<char> is_basic_;
    std::vector<char> at_upper_;

    std::size_t iterations_ = 0;
    std::size_t max_iterations_ = 0;
    std::size_t since_reinvert_ = 0;
};

void Simplex::build() {
    p_.validate();
    const std::size_t nv = p_.num_vars();
    m_ = p_.num_rows();

    // structural columns
    std::size_t col = 0;
    vars_.resize(nv);
    std::vector<double> struct_ub;
    std::vector<double> struct_cost;
    for (std::size_t j = 0; j < nv; ++j) {
        const double l = p_.lower[j], u = p_.upper[j], c = p_.objective[j];
        if (std::isfinite(l)) {
            vars_[j] = {VarMap::Shift, col++, 0, l};
            struct_ub.push_back(std::isfinite(u) ? std::max(0.0, u - l) : kInf);
            struct_cost.push_back(c);
        } else if (std::isfinite(u)) {
            vars_[j] = {VarMap::Flip, col++, 0, u};
            struct_ub.push_back(kInf);
            struct_cost.push_back(-c);
        } else {
            vars_[j] = {VarMap::Split, col, col + 1, 0.0};
            col += 2;
            struct_ub.insert(struct_ub.end(), {kInf, kInf});
            struct_cost.insert(struct_cost.end(), {c, -c});
        }
    }
    const std::size_t ns = col;

    // dense rows in z-space plus slack bookkeeping
    std::vector<std::vector<double>> dense(m_, std::vector<double>(ns, 0.0));
    std::vector<double> rhs(m_);
    std::vector<int> slack_sign(m_, 0);
    for (std::size_t r = 0; r < m_; ++r) {
        const Row& row = p_.rows[r];
        double b = row.rhs;
        for (const Term& t : row.terms) {
            const VarTransform& v = vars_[t.var];
            switch (v.kind) {
                case VarMap::Shift:
                    dense[r][v.col] += t.coef;
                    b -= t.coef * v.offset;
                    break;
                case VarMap::Flip:
                    dense[r][v.col] -= t.coef;
                    b -= t.coef * v.offset;
                    break;
                case VarMap::Split:
                    dense[r][v.col] += t.coef;
                    dense[r][v.col2] -= t.coef;
                    break;
            }
        }
        rhs[r] = b;
        slack_sign[r] = row.sense == Sense::LessEqual ? 1 : row.sense == Sense::GreaterEqual ? -1 : 0;
    }

    std::size_t num_slack = 0;
    for (int s : slack_sign) num_slack += s != 0;
    row_sign_.assign(m_, 1.0);
    std::size_t num_art = 0;
    for (std::size_t r = 0; r < m_; ++r) {
        if (rhs[r] < 0.0) row_sign_[r] = -1.0;
        const bool slack_is_unit = slack_sign[r] != 0 && slack_sign[r] * row_sign_[r] > 0;
        if (!slack_is_unit) ++num_art;
    }

    n_ = ns + num_slack + num_art;
    a_.assign(m_ * n_, 0.0);
    b_.assign(m_, 0.0);
    ub_.assign(n_, kInf);
    cost2_.assign(n_, 0.0);
    artificial_.assign(n_, 0);
    barred_.assign(n_, 0);
    unit_col_.assign(m_, 0);
    for (std::size_t j = 0; j < ns; ++j) {
        ub_[j] = struct_ub[j];
        cost2_[j] = struct_cost[j];
    }

    std::size_t next_slack = ns, next_art = ns + num_slack;
    for (std::size_t r = 0; r < m_; ++r) {
        const double sg = row_sign_[r];
        for (std::size_t j = 0; j < ns; ++j) a_[r * n_ + j] = sg * dense[r][j];
        b_[r] = sg * rhs[r];
        bool have_unit = false;
        if (slack_sign[r] != 0) {
            const std::size_t sc = next_slack++;
            a_[r * n_ + sc] = sg * slack_sign[r];
            if (sg * slack_sign[r] > 0) {
                unit_col_[r] = sc;
                have_unit = true;
            }
        }
        if (!have_unit) {
            const std::size_t ac = next_art++;
            a_[r * n_ + ac] = 1.0;
            artificial_[ac] = 1;
            unit_col_[r] = ac;
        }
    }

    tab_ = a_;
    beta_ = b_;
    basis_ = unit_col_;
    is_basic_.assign(n_, 0);
    at_upper_.assign(n_, 0);
    for (std::size_t c : basis_) is_basic_[c] = 1;
    d_.assign(n_, 0.0);

    max_iterations_ = opt_.max_iterations ? opt_.max_iterations : 50 * (m_ + n_) + 1000;
}

void Simplex::compute_reduced_costs(const std::vector<double>& cost) {
    for (std::size_t j = 0; j < n_; ++j) d_[j] = cost[j];
    for (std::size_t r = 0; r < m_; ++r) {
        const double cb = cost[basis_[r]];
        if (cb == 0.0) continue;
        const double* row = &tab_[r * n_];
        for (std::size_t j = 0; j < n_; ++j) d_[j] -= cb * row[j];
    }
    for (std::size_t r = 0; r < m_; ++r) d_[basis_[r]] = 0.0;
}

void Simplex::pivot(std::size_t r, std::size_t j) {
    double* prow = &tab_[r * n_];
    const double inv = 1.0 / prow[j];
    for (std::size_t c = 0; c < n_; ++c) prow[c] *= inv;
    prow[j] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
        if (i == r) continue;
        double* row = &tab_[i * n_];
        const double f = row[j];
        if (f == 0.0) continue;
        for (std::size_t c = 0; c < n_; ++c) row[c] -= f * prow[c];
        row[j] = 0.0;
    }
    const double f = d_[j];
    if (f != 0.0) {
        for (std::size_t c = 0; c < n_; ++c) d_[c] -= f * prow[c];
        d_[j] = 0.0;
    }
    is_basic_[basis_[r]] = 0;
    basis_[r] = j;
    is_basic_[j] = 1;
    at_upper_[j] = 0;
}

// Rebuild B^{-1} A and the basic values from the original data.
void Simplex::reinvert() {
    // Gauss-Jordan on [B | A | rhs] with partial pivoting.
    std::vector<double> bmat(m_ * m_);
    for (std::size_t r = 0; r < m_; ++r)
        for (std::size_t k = 0; k < m_; ++k) bmat[r * m_ + k] = a_[r * n_ + basis_[k]];
    std::vector<double> rhs = b_;
    for (std::size_t j = 0; j < n_; ++j) {
        if (is_basic_[j] || !at_upper_[j]) continue;
        for (std::size_t r = 0; r < m_; ++r) rhs[r] -= a_[r * n_ + j] * ub_[j];
    }
    tab_ = a_;
    std::vector<std::size_t> perm(m_);
    for (std::size_t k = 0; k < m_; ++k) perm[k] = k;
    // eliminate column k of B; rows of tab_/rhs follow the same operations
    for (std::size_t k = 0; k < m_; ++k) {
        std::size_t best = k;
        double bestv = std::abs(bmat[k * m_ + k]);
        for (std::size_t r = k + 1; r < m_; ++r) {
            const double v = std::abs(bmat[r * m_ + k]);
            if (v > bestv) { bestv = v; best = r; }
        }
        if (bestv < 1e-12) throw NumericalError("simplex: singular basis during reinversion");
        if (best != k) {
            for (std::size_t c = 0; c < m_; ++c) std::swap(bmat[k * m_ + c], bmat[best * m_ + c]);
            for (std::size_t c = 0; c < n_; ++c) std::swap(tab_[k * n_ + c], tab_[best * n_ + c]);
            std::swap(rhs[k], rhs[best]);
        }
        const double inv = 1.0 / bmat[k * m_ + k];
        for (std::size_t c = 0; c < m_; ++c) bmat[k * m_ + c] *= inv;
        for (std::size_t c = 0; c < n_; ++c) tab_[k * n_ + c] *= inv;
        rhs[k] *= inv;
        for (std::size_t r = 0; r < m_; ++r) {
            if (r == k) continue;
            const double f = bmat[r * m_ + k];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < m_; ++c) bmat[r * m_ + c] -= f * bmat[k * m_ + c];
            for (std::size_t c = 0; c < n_; ++c) tab_[r * n_ + c] -= f * tab_[k * n_ + c];
            rhs[r] -= f * rhs[k];
        }
    }
    // row k now expresses basis_[k]
    beta_ = rhs;
    since_reinvert_ = 0;
}

std::vector<double> Simplex::column_values() const {
    std::vector<double> z(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
        if (!is_basic_[j] && at_upper_[j]) z[j] = ub_[j];
    for (std::size_t r = 0; r < m_; ++r) z[basis_[r]] = beta_[r];
    return z;
}

double Simplex::residual() const {
    const std::vector<double> z = column_values();
    double worst = 0.0;
    for (std::size_t r = 0; r < m_; ++r) {
        double acc = -b_[r];
        for (std::size_t j = 0; j < n_; ++j) acc += a_[r * n_ + j] * z[j];
        worst = std::max(worst, std::abs(acc) / (1.0 + std::abs(b_[r])));
    }
    for (std::size_t j = 0; j < n_; ++j) {
        const double scale = 1.0 + (std::isfinite(ub_[j]) ? ub_[j] : 0.0);
        worst = std::max(worst, -z[j] / scale);
        if (std::isfinite(ub_[j])) worst = std::max(worst, (z[j] - ub_[j]) / scale);
    }
    return worst;
}

Simplex::Outcome Simplex::iterate(const std::vector<double>& cost) {
    compute_reduced_costs(cost);
    const std::size_t degenerate_limit = 2 * (m_ + n_);
    std::size_t degenerate_run = 0;
    const double ftol = opt_.feasibility_tol;
    const double ptol = opt_.pivot_tol;

    for (;;) {
        if (++iterations_ > max_iterations_) throw NumericalError("simplex: iteration limit exceeded");
        if (since_reinvert_ >= 200) {
            reinvert();
            compute_reduced_costs(cost);
        }
        const bool bland = degenerate_run >= degenerate_limit;

        // pricing
        std::size_t enter = n_;
        double best = 0.0;
        int dir = 0;
        for (std::size_t j = 0; j < n_; ++j) {
            if (is_basic_[j] || barred_[j] || ub_[j] <= 0.0) continue;
            double gain = 0.0;
            int dj = 0;
            if (!at_upper_[j] && d_[j] < -opt_.optimality_tol) { gain = -d_[j]; dj = 1; }
            else if (at_upper_[j] && d_[j] > opt_.optimality_tol) { gain = d_[j]; dj = -1; }
            if (dj == 0) continue;
            if (bland) { enter = j; dir = dj; break; }
            if (gain > best) { best = gain; enter = j; dir = dj; }
        }
        if (enter == n_) return Outcome::Optimal;

        // ratio test
        double theta = ub_[enter];
        std::size_t leave_row = m_;
        double leave_mag = 0.0;
        for (std::size_t r = 0; r < m_; ++r) {
            const double g = dir * tab(r, enter);
            double lim;
            if (g > ptol) lim = std::max(0.0, beta_[r]) / g;
            else if (g < -ptol && std::isfinite(ub_[basis_[r]])) lim = std::max(0.0, ub_[basis_[r]] - beta_[r]) / -g;
            else continue;
            const double mag = std::abs(g);
            bool take = false;
            if (lim < theta - 1e-12) take = true;
            else if (lim <= theta + 1e-12 && leave_row != m_)
                take = bland ? basis_[r] < basis_[leave_row] : mag > leave_mag;
            if (take) {
                theta = lim;
                leave_row = r;
                leave_mag = mag;
            }
        }
        if (!std::isfinite(theta)) return Outcome::Unbounded;

        degenerate_run = theta <= ftol ? degenerate_run + 1 : 0;

        for (std::size_t r = 0; r < m_; ++r) beta_[r] -= dir * theta * tab(r, enter);
        if (leave_row == m_) {
            at_upper_[enter] = !at_upper_[enter];
            continue;
        }
        const double entering_value = at_upper_[enter] ? ub_[enter] - theta : theta;
        const std::size_t leaving = basis_[leave_row];
        const bool leaves_at_upper = dir * tab(leave_row, enter) < 0.0;
        pivot(leave_row, enter);
        beta_[leave_row] = entering_value;
        at_upper_[leaving] = leaves_at_upper ? 1 : 0;
        ++since_reinvert_;
    }
}

LpSolution Simplex::run() {
    LpSolution sol;

    // Phase I
    bool have_art = false;
    std::vector<double> cost1(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
        if (artificial_[j]) { cost1[j] = 1.0; have_art = true; }
    if (have_art) {
        if (iterate(cost1) == Outcome::Unbounded) throw NumericalError("simplex: phase one reported unbounded");
        double infeas = 0.0, scale = 1.0;
        for (std::size_t r = 0; r < m_; ++r) {
            scale = std::max(scale, std::abs(b_[r]));
            if (artificial_[basis_[r]]) infeas += std::max(0.0, beta_[r]);
        }
        for (std::size_t j = 0; j < n_; ++j)
            if (artificial_[j] && !is_basic_[j] && at_upper_[j]) infeas += ub_[j];
        if (infeas > 1e-7 * scale) {
            sol.status = LpStatus::Infeasible;
            sol.iterations = iterations_;
            return sol;
        }
        // drive zero-valued artificials out of the basis
        for (std::size_t r = 0; r < m_; ++r) {
            if (!artificial_[basis_[r]]) continue;
            std::size_t best = n_;
            double bv = 1e-7;
            for (std::size_t j = 0; j < n_; ++j) {
                if (is_basic_[j] || artificial_[j]) continue;
                const double v = std::abs(tab(r, j));
                if (v > bv) { bv = v; best = j; }
            }
            if (best == n_) continue;  // redundant row; artificial stays basic at zero
            const double value = at_upper_[best] ? ub_[best] : 0.0;
            const std::size_t leaving = basis_[r];
            pivot(r, best);
            beta_[r] = value;
            at_upper_[leaving] = 0;
        }
        for (std::size_t j = 0; j < n_; ++j)
            if (artificial_[j]) { barred_[j] = 1; ub_[j] = 0.0; }
    }

    // Phase II with reinversion on residual drift
    for (std::size_t attempt = 0;; ++attempt) {
        const Outcome out = iterate(cost2_);
        if (out == Outcome::Unbounded) {
            sol.status = LpStatus::Unbounded;
            sol.iterations = iterations_;
            return sol;
        }
        if (residual() <= 1e-7) break;
        if (attempt >= opt_.max_refactorizations)
            throw NumericalError("simplex: residuals remain large after reinversion");
        reinvert();
    }

    const std::vector<double> z = column_values();
    sol.status = LpStatus::Optimal;
    sol.x.resize(p_.num_vars());
    for (std::size_t j = 0; j < p_.num_vars(); ++j) {
        const VarTransform& v = vars_[j];
        switch (v.kind) {
            case VarMap::Shift: sol.x[j] = v.offset + z[v.col]; break;
            case VarMap::Flip: sol.x[j] = v.offset - z[v.col]; break;
            case VarMap::Split: sol.x[j] = z[v.col] - z[v.col2]; break;
        }
        // clamp tiny drift back into the box
        if (std::isfinite(p_.lower[j])) sol.x[j] = std::max(sol.x[j], p_.lower[j]);
        if (std::isfinite(p_.upper[j])) sol.x[j] = std::min(sol.x[j], p_.upper[j]);
    }
    double obj = 0.0;
    for (std::size_t j = 0; j < p_.num_vars(); ++j) obj += p_.objective[j] * sol.x[j];
    sol.objective = obj;

    sol.duals.assign(m_, 0.0);
    for (std::size_t r = 0; r < m_; ++r) {
        double y = 0.0;
        const std::size_t uc = unit_col_[r];
        for (std::size_t i = 0; i < m_; ++i) y += cost2_[basis_[i]] * tab(i, uc);
        sol.duals[r] = row_sign_[r] * y;
    }
    sol.iterations = iterations_;
    return sol;
}

std::string format_coef(double c) {
    std::ostringstream os;
    os.precision(17);
    os << c;
    return os.str();
}

}  // namespace

LpSolution lp_solve(const LpProblem& problem, const LpOptions& options) {
    Simplex simplex(problem, options);
    return simplex.run();
}

std::string to_lp_format(const LpProblem& problem, const std::vector<std::size_t>& integer_vars) {
    auto name = [&](std::size_t j) {
        if (j < problem.names.size() && !problem.names[j].empty()) return problem.names[j];
        return "x" + std::to_string(j);
    };
    auto linear = [&](std::ostream& os, const std::vector<std::pair<std::size_t, double>>& terms) {
        bool first = true;
        for (const auto& [j, c] : terms) {
            if (c == 0.0) continue;
            os << (c < 0 ? (first ? "- " : " - ") : (first ? "" : " + ")) << format_coef(std::abs(c)) << ' ' << name(j);
            first = false;
        }
        if (first) os << "0 " << name(0);
    };
    std::ostringstream os;
    os << "Minimize\n obj: ";
    std::vector<std::pair<std::size_t, double>> obj;
    for (std::size_t j = 0; j < problem.num_vars(); ++j) obj.emplace_back(j, problem.objective[j]);
    linear(os, obj);
    os << "\nSubject To\n";
    for (std::size_t r = 0; r < problem.num_rows(); ++r) {
        const Row& row = problem.rows[r];
        os << ' ' << (row.name.empty() ? "c" + std::to_string(r) : row.name) << ": ";
        std::vector<std::pair<std::size_t, double>> terms;
        for (const Term& t : row.terms) terms.emplace_back(t.var, t.coef);
        linear(os, terms);
        os << (row.sense == Sense::LessEqual ? " <= " : row.sense == Sense::GreaterEqual ? " >= " : " = ")
           << format_coef(row.rhs) << '\n';
    }
    os << "Bounds\n";
    for (std::size_t j = 0; j < problem.num_vars(); ++j) {
        const double l = problem.lower[j], u = problem.upper[j];
        if (!std::isfinite(l) && !std::isfinite(u)) os << ' ' << name(j) << " free\n";
        else {
            os << ' ' << (std::isfinite(l) ? format_coef(l) : "-inf") << " <= " << name(j) << " <= "
               << (std::isfinite(u) ? format_coef(u) : "+inf") << '\n';
        }
    }
    if (!integer_vars.empty()) {
        os << "General\n";
        for (std::size_t j : integer_vars) os << ' ' << name(j) << '\n';
    }
    os << "End\n";
    return os.str();
}

}  // namespace cqm::solver
