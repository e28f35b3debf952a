// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Pass criterion numbers as arguments to run a subset.

#include "cqm/asp.hpp"
#include "cqm/estimator.hpp"
#include "cqm/lab.hpp"
#include "cqm/sicg.hpp"
#include "cqm/twostage.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace cqm;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

Outcome strong_duality() {
    std::mt19937_64 rng(1001);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto inst = oracle::random_instance(rng, oracle::pick(rng, 1, 6));
        const auto x = oracle::random_schedule(rng, inst);
        const auto s = oracle::random_durations(rng, inst);
        const double f = cost_recursion(inst, x, s).cost;
        double best = -solver::kInf;
        for (const auto& p : enumerate_partitions(inst.n))
            best = std::max(best, asp_dual_value(vertex_from_partition(inst, p).y, x, s));
        const double lp = recourse_lp_value(inst, x, s);
        worst = std::max({worst, std::abs(f - best), std::abs(f - lp)});
    }
    return {worst <= 1e-6, fmt("max deviation %.3g over 100 instances", worst)};
}

Outcome quantile_scan() {
    std::mt19937_64 rng(1002);
    int bad = 0;
    for (int k = 0; k < 500; ++k) {
        const std::size_t n = oracle::pick(rng, 1, 12);
        std::vector<double> v(n);
        for (double& x : v) x = k % 2 ? std::round(oracle::uniform(rng, 0, 6)) : oracle::uniform(rng, -10, 10);
        const auto w = oracle::random_weights(rng, n);
        const double tau = oracle::uniform(rng, 1e-6, 1.0);
        const auto q = weighted_quantile(v, w, tau);
        const auto [bv, bi] = oracle::scan_quantile(v, w, tau);
        if (q.value != bv || q.index != bi) ++bad;
    }
    return {bad == 0, fmt("%.0f mismatches in 500 triples", bad)};
}

struct SmallCase {
    ASPInstance inst;
    ScenarioSet sc;
    double tau;
    double brute;
};

const std::vector<SmallCase>& small_cases() {
    static const std::vector<SmallCase> cases = [] {
        std::mt19937_64 rng(1003);
        std::vector<SmallCase> out;
        for (int k = 0; k < 30; ++k) {
            SmallCase c;
            c.inst = oracle::random_instance(rng, oracle::pick(rng, 1, 3));
            c.sc = oracle::random_scenarios(rng, c.inst, oracle::pick(rng, 2, 10), k % 3 == 0);
            c.tau = oracle::uniform(rng, 0.5, 0.95);
            c.brute = oracle::brute_quantile_optimum(c.inst, c.sc, c.tau);
            out.push_back(std::move(c));
        }
        return out;
    }();
    return cases;
}

Outcome direct_milp() {
    double worst = 0.0;
    for (const auto& c : small_cases()) {
        const auto m = build_direct_milp(to_two_stage(c.inst), c.sc, c.tau, big_m_bound(c.inst, c.sc));
        const auto r = solver::milp_solve(m.milp);
        if (!r.incumbent) return {false, "direct MILP returned no incumbent"};
        worst = std::max(worst, std::abs(r.objective - c.brute) / std::max(1.0, c.brute));
    }
    return {worst <= 1e-6, fmt("max relative deviation %.3g over 30 instances", worst)};
}

Outcome sicg_small() {
    double worst = 0.0;
    std::size_t bracket_violations = 0, exploration_violations = 0, rows = 0;
    int k = 0;
    for (const auto& c : small_cases()) {
        SiCGParams p;
        p.eps = 1e-3;
        p.eps_tilde = 4e-4;
        p.tau = c.tau;
        p.seed = static_cast<std::uint64_t>(k++);
        p.kappa.reset();
        p.beta.reset();
        const auto r = sicg_solve(c.inst, c.sc, p);
        worst = std::max(worst, std::abs(r.objective - c.brute) / c.brute);
        for (const auto& row : r.trace) {
            ++rows;
            if (row.L_ell > c.brute + 1e-6 || row.U_bar < c.brute - 1e-6) ++bracket_violations;
        }
        if (r.explorations > (std::size_t{1} << c.inst.n)) ++exploration_violations;
    }
    std::ostringstream d;
    d << "max relative deviation " << worst << "; bracket violations " << bracket_violations << " in " << rows
      << " rows; runs over 2^n explorations " << exploration_violations;
    return {worst <= 1e-3 + 1e-6 && bracket_violations == 0 && exploration_violations == 0, d.str()};
}

Outcome lipschitz() {
    std::mt19937_64 rng(1005);
    const auto inst = oracle::random_instance(rng, 4);
    const auto sc = oracle::random_scenarios(rng, inst, 40);
    const double L = lipschitz_constant(inst);
    double worst_ratio = 0.0;
    for (int k = 0; k < 200; ++k) {
        const auto a = oracle::random_schedule(rng, inst), b = oracle::random_schedule(rng, inst);
        double d2 = 0.0;
        for (std::size_t i = 0; i < 4; ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
        const double dq = std::abs(quantile_objective(inst, sc, a, 0.95).value - quantile_objective(inst, sc, b, 0.95).value);
        worst_ratio = std::max(worst_ratio, dq / (L * std::sqrt(d2)));
    }
    return {worst_ratio <= 1.0 + 1e-9, fmt("max |dQ| / (L |dx|) = %.4f with L = %.4f", worst_ratio, L)};
}

Outcome big_m() {
    std::mt19937_64 rng(1006);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const auto inst = oracle::random_instance(rng, oracle::pick(rng, 1, 6));
        const auto sc = oracle::random_scenarios(rng, inst, 10);
        const double M = big_m_bound(inst, sc);
        for (int t = 0; t < 1000; ++t) {
            const auto x = oracle::random_schedule(rng, inst);
            for (const auto& s : sc.xi) worst = std::max(worst, recourse_cost(inst, x, s) / M);
        }
    }
    return {worst <= 1.0, fmt("max f / M = %.4f over 20 instances x 1000 schedules", worst)};
}

Outcome consistency() {
    // n = 1, c_u = 0, x = T_h = 40: cost = c_o max(s - 40, 0), monotone in s
    ASPInstance inst;
    inst.n = 1;
    inst.c_u = {0.0};
    inst.c_w = {0.0};
    inst.c_o = 10.0;
    inst.T_h = 40.0;
    const std::vector<double> x{40.0};
    const double tau = 0.95, z0 = 0.0;
    lab::GenConfig g;
    g.n = 1;
    g.predictor = {z0};
    const double truth = inst.c_o * std::max(lab::lognormal_quantile(g.mu_base + z0, g.nu * g.mu_base, tau) - 40.0, 0.0);
    std::vector<double> med;
    std::ostringstream d;
    for (std::size_t N : {500, 5000, 50000}) {
        std::vector<double> err;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            g.N = N;
            g.seed = lab::stream_seed(7, "consistency", seed * 100000 + N);
            const auto pool = lab::generate_pool(g);
            std::vector<double> z, cost;
            for (const auto& r : pool) {
                z.push_back(r.z);
                const std::vector<double> s{r.s};
                cost.push_back(recourse_cost(inst, x, s));
            }
            const auto w = kernel_weights(z, z0, Kernel{KernelKind::Naive, 1.0});
            err.push_back(std::abs(weighted_quantile(cost, w, tau).value - truth));
        }
        med.push_back(median(err));
        d << "N=" << N << " median |err| " << med.back() << "; ";
    }
    d << "truth " << truth;
    return {med[0] > med[1] && med[1] > med[2], d.str()};
}

// Table-5 style experiment shared by criteria 8, 9 and 11.
const lab::ExperimentReport& table5(const std::string& preset) {
    static std::map<std::string, lab::ExperimentReport> cache;
    auto it = cache.find(preset);
    if (it != cache.end()) return it->second;
    lab::ExperimentConfig c = lab::preset_config(preset);
    c.reps = 20;
    c.jobs = jobs();
    return cache.emplace(preset, lab::run_experiment(c)).first->second;
}

std::vector<const lab::RunRecord*> select(const lab::ExperimentReport& r, const std::string& method,
                                          const std::string& objective) {
    std::vector<const lab::RunRecord*> out;
    for (const auto& rec : r.records)
        if (rec.method == method && rec.objective == objective) out.push_back(&rec);
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->rep < b->rep; });
    return out;
}

std::vector<double> mean_schedule(const std::vector<const lab::RunRecord*>& recs) {
    std::vector<double> m(recs.front()->x.size(), 0.0);
    for (const auto* r : recs)
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += r->x[i] / static_cast<double>(recs.size());
    return m;
}

Outcome table5_ordering() {
    const auto& r = table5("table5-b-nu2-R5");
    std::vector<double> cso, saa;
    for (const auto* rec : select(r, "cso", "quantile")) cso.push_back(rec->oos.at("none").p95);
    for (const auto* rec : select(r, "saa", "quantile")) saa.push_back(rec->oos.at("none").p95);
    const double mc = median(cso), ms = median(saa);
    const double sep = 1.0 - mc / ms;
    return {sep >= 0.25, fmt("median OOS p95: CSO %.1f, SAA %.1f (CSO %.1f%% lower)", mc, ms, 100.0 * sep)};
}

Outcome figure2_pattern() {
    const auto& r = table5("table5-b-nu2-R5");
    const auto t = mean_schedule(select(r, "true", "quantile"));
    const auto c = mean_schedule(select(r, "cso", "quantile"));
    const auto s = mean_schedule(select(r, "saa", "quantile"));
    double cso_gap = 0.0, saa_max = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        cso_gap += std::abs(c[i] - t[i]) / static_cast<double>(t.size());
        saa_max = std::max(saa_max, std::abs(s[i] - t[i]));
    }
    return {cso_gap <= 5.0 && saa_max >= 10.0,
            fmt("mean |CSO - True| %.2f min; max slot |SAA - True| %.2f min", cso_gap, saa_max)};
}

Outcome quantile_vs_expectation() {
    const auto& r = table5("table5-a-nu2-R5");
    auto head_mean = [](const lab::RunRecord* rec) {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < rec->x.size(); ++i) s += rec->x[i];
        return s / static_cast<double>(rec->x.size() - 1);
    };
    std::vector<double> q, e;
    for (const auto* rec : select(r, "cso", "quantile")) q.push_back(head_mean(rec));
    for (const auto* rec : select(r, "cso", "expectation")) e.push_back(head_mean(rec));
    const double mq = median(q), me = median(e);
    return {mq - me >= 2.0, fmt("median mean allocation over slots 1..n-1: quantile %.2f, expectation %.2f (diff %.2f)", mq,
                                me, mq - me)};
}

Outcome perturbation_direction() {
    const auto& r = table5("table5-b-nu2-R5");
    const auto q = select(r, "cso", "quantile");
    const auto e = select(r, "cso", "expectation");
    int wins = 0;
    for (std::size_t k = 0; k < q.size(); ++k)
        if (q[k]->oos.at("set2").p95 < e[k]->oos.at("set2").p95) ++wins;
    return {wins >= 15, fmt("quantile schedule has the lower Set II p95 in %.0f of %.0f replications", wins,
                            static_cast<double>(q.size()))};
}

Outcome tractability() {
    lab::GenConfig g;
    g.predictor_kind = lab::PredictorKind::IidMeans;
    g.seed = 12;
    const auto inst = lab::make_instance(g);
    const auto sc = lab::true_scenarios(g, 200, lab::stream_seed(g.seed, "true"));
    SiCGParams p;
    p.eps = 0.02;
    p.tau = 0.95;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = sicg_solve(inst, sc, p);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {r.converged && r.gap <= 0.02 && secs < 120.0,
            fmt("gap %.4f after %.2f s (%.0f iterations)", r.gap, secs, static_cast<double>(r.iterations))};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"strong duality", strong_duality},
        {"weighted quantile vs CDF scan", quantile_scan},
        {"direct MILP vs v-pattern enumeration", direct_milp},
        {"SiCG correctness", sicg_small},
        {"Lipschitz bound", lipschitz},
        {"big-M validity", big_m},
        {"CSO consistency", consistency},
        {"CSO vs SAA out-of-sample p95", table5_ordering},
        {"CSO schedules track the true-distribution schedules", figure2_pattern},
        {"quantile vs expectation allocations", quantile_vs_expectation},
        {"Set II robustness direction", perturbation_direction},
        {"tractability n=6, N=200", tractability},
    };
    std::set<int> only;
    for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));

    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k + 1);
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d %s: %s (%s) [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
