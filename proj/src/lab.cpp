#include "cqm/lab.hpp"

#include "cqm/errors.hpp"
#include "cqm/lp.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

namespace cqm::lab {

using solver::kInf;

void GenConfig::validate() const {
    if (n == 0) throw InvalidArgument("GenConfig: n must be positive");
    if (!(nu > 0.0)) throw InvalidArgument("GenConfig: nu must be positive");
    if (!(R >= 0.0)) throw InvalidArgument("GenConfig: R must be nonnegative");
    if (!(mu_base > 0.0)) throw InvalidArgument("GenConfig: mu_base must be positive");
    if (predictor_kind == PredictorKind::Fixed && !predictor.empty() && predictor.size() != n)
        throw InvalidArgument("GenConfig: predictor needs one characteristic per slot");
    if (N == 0) throw InvalidArgument("GenConfig: pool size must be positive");
    if (!(cost_unit > 0.0)) throw InvalidArgument("GenConfig: cost unit must be positive");
}

std::vector<double> named_predictor(const std::string& name, std::size_t n) {
    if (name == "a") return std::vector<double>(n, 0.0);
    if (n != 6) throw InvalidArgument("named predictors b and c are defined for six slots");
    if (name == "b") return {-15, -9, -3, 3, 9, 15};
    if (name == "c") return {15, 9, 3, -3, -9, -15};
    throw InvalidArgument("unknown predictor '" + name + "'");
}

LognormalParams lognormal_params(double mean, double sd) {
    if (!(mean > 0.0) || !(sd >= 0.0)) throw InvalidArgument("lognormal_params: mean must be positive, sd nonnegative");
    const double s2 = std::log1p((sd / mean) * (sd / mean));
    return {std::log(mean) - 0.5 * s2, std::sqrt(s2)};
}

double lognormal_quantile(double mean, double sd, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("lognormal_quantile: tau must lie in (0, 1)");
    const LognormalParams p = lognormal_params(mean, sd);
    // invert the normal CDF by bisection on erfc
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < tau) lo = mid;
        else hi = mid;
    }
    return std::exp(p.mu_log + p.sigma_log * 0.5 * (lo + hi));
}

std::uint64_t stream_seed(std::uint64_t base, const std::string& stream, std::uint64_t index) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : stream) {
        h ^= c;
        h *= 1099511628211ull;
    }
    auto mix = [](std::uint64_t z) {  // splitmix64 finaliser
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(base) ^ h) ^ index);
}

std::vector<SlotDistribution> slot_distributions(const GenConfig& config) {
    config.validate();
    std::vector<SlotDistribution> out(config.n);
    if (config.predictor_kind == PredictorKind::IidMeans) {
        std::mt19937_64 rng(stream_seed(config.seed, "means"));
        std::uniform_real_distribution<double> U(config.mu_base * 0.9, config.mu_base * 1.1);
        for (auto& d : out) {
            d.mean = U(rng);
            d.sd = config.nu * d.mean;
        }
        return out;
    }
    for (std::size_t k = 0; k < config.n; ++k) {
        const double z = config.predictor.empty() ? 0.0 : config.predictor[k];
        out[k].mean = config.mu_base + z;
        out[k].sd = config.nu * config.mu_base;
        if (!(out[k].mean > 0.0)) throw InvalidArgument("slot mean must be positive");
    }
    return out;
}

double horizon(const GenConfig& config) {
    config.validate();
    if (config.predictor_kind == PredictorKind::Fixed) {
        const double n = static_cast<double>(config.n);
        return n * config.mu_base + config.R * std::sqrt(n) * config.nu * config.mu_base;
    }
    double mean = 0.0, var = 0.0;
    for (const auto& d : slot_distributions(config)) {
        mean += d.mean;
        var += d.sd * d.sd;
    }
    return mean + config.R * std::sqrt(var);
}

ASPInstance make_instance(const GenConfig& config) {
    return ASPInstance::standard(config.n, horizon(config), config.cost_unit);
}

namespace {

double draw_lognormal(std::mt19937_64& rng, double mean, double sd) {
    const LognormalParams p = lognormal_params(mean, sd);
    std::normal_distribution<double> Z(0.0, 1.0);
    return std::exp(p.mu_log + p.sigma_log * Z(rng));
}

ScenarioSet draw_from_lists(const std::vector<std::vector<double>>& lists, std::size_t n_sub, std::uint64_t seed) {
    if (n_sub == 0) throw InvalidArgument("sub-sample size must be positive");
    std::mt19937_64 rng(seed);
    ScenarioSet out;
    out.xi.assign(n_sub, std::vector<double>(lists.size()));
    for (std::size_t r = 0; r < n_sub; ++r)
        for (std::size_t k = 0; k < lists.size(); ++k) {
            std::uniform_int_distribution<std::size_t> pick(0, lists[k].size() - 1);
            out.xi[r][k] = lists[k][pick(rng)];
        }
    out.weights = uniform_weights(n_sub);
    return out;
}

}  // namespace

Dataset generate_pool(const GenConfig& config) {
    config.validate();
    std::mt19937_64 rng(stream_seed(config.seed, "pool"));
    std::uniform_real_distribution<double> Z(-15.0, 15.0);
    Dataset pool;
    pool.reserve(config.N);
    const double sd = config.nu * config.mu_base;
    while (pool.size() < config.N) {
        const double z = Z(rng);
        const double mean = config.mu_base + z;
        if (!(mean > 0.0)) continue;  // resample characteristics with a nonpositive mean
        pool.push_back({z, draw_lognormal(rng, mean, sd)});
    }
    return pool;
}

ScenarioSet cso_subsample(const Dataset& pool, std::span<const double> query, double bandwidth, std::size_t n_sub,
                          std::uint64_t seed) {
    if (pool.empty()) throw InvalidArgument("cso_subsample: empty pool");
    if (!(bandwidth > 0.0)) throw InvalidArgument("cso_subsample: bandwidth must be positive");
    std::vector<std::vector<double>> lists(query.size());
    for (std::size_t k = 0; k < query.size(); ++k) {
        for (const ContextRecord& r : pool)
            if (std::abs(r.z - query[k]) <= bandwidth) lists[k].push_back(r.s);
        if (lists[k].empty())
            throw NoMass("no record within the bandwidth of slot " + std::to_string(k + 1), static_cast<long>(k + 1));
    }
    return draw_from_lists(lists, n_sub, seed);
}

ScenarioSet saa_subsample(const Dataset& pool, std::size_t n, std::size_t n_sub, std::uint64_t seed) {
    if (pool.empty()) throw InvalidArgument("saa_subsample: empty pool");
    std::vector<double> all;
    all.reserve(pool.size());
    for (const ContextRecord& r : pool) all.push_back(r.s);
    return draw_from_lists(std::vector<std::vector<double>>(n, all), n_sub, seed);
}

ScenarioSet true_scenarios(const GenConfig& config, std::size_t n_sub, std::uint64_t seed) {
    if (n_sub == 0) throw InvalidArgument("true_scenarios: size must be positive");
    const auto slots = slot_distributions(config);
    std::mt19937_64 rng(seed);
    ScenarioSet out;
    out.xi.assign(n_sub, std::vector<double>(slots.size()));
    for (auto& row : out.xi)
        for (std::size_t k = 0; k < slots.size(); ++k) row[k] = draw_lognormal(rng, slots[k].mean, slots[k].sd);
    out.weights = uniform_weights(n_sub);
    return out;
}

double expected_cost(const ASPInstance& instance, const ScenarioSet& scenarios, std::span<const double> x) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < scenarios.size(); ++i)
        acc += static_cast<long double>(scenarios.weights[i]) * recourse_cost(instance, x, scenarios.xi[i]);
    return static_cast<double>(acc);
}

Schedule solve_expectation(const ASPInstance& instance, const ScenarioSet& scenarios) {
    instance.validate();
    scenarios.validate();
    const std::size_t n = instance.n;
    if (scenarios.dim() != n) throw InvalidArgument("solve_expectation: scenario width differs from n");

    solver::LpProblem master;
    std::vector<solver::Term> sum;
    for (std::size_t i = 0; i < n; ++i) {
        master.add_variable(0.0);
        sum.push_back({i, 1.0});
    }
    const std::size_t theta = master.add_variable(1.0, 0.0, kInf);
    master.add_row(std::move(sum), solver::Sense::Equal, instance.T_h);

    std::vector<double> x(n, instance.T_h / static_cast<double>(n));
    std::vector<double> best_x = x;
    double upper = kInf;
    for (int it = 0; it < 5000; ++it) {
        // aggregated optimality cut theta >= sum_i w_i y_i^T (s_i - x)
        std::vector<double> slope(n, 0.0);
        double value = 0.0, intercept = 0.0;
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            const ASPDualVertex v = optimal_dual(instance, x, scenarios.xi[i]);
            const double w = scenarios.weights[i];
            for (std::size_t k = 0; k < n; ++k) {
                slope[k] += w * v.y[k];
                intercept += w * v.y[k] * scenarios.xi[i][k];
            }
            value += w * asp_dual_value(v.y, x, scenarios.xi[i]);
        }
        if (value < upper) {
            upper = value;
            best_x = x;
        }
        std::vector<solver::Term> terms{{theta, 1.0}};
        for (std::size_t k = 0; k < n; ++k)
            if (slope[k] != 0.0) terms.push_back({k, slope[k]});
        master.add_row(std::move(terms), solver::Sense::GreaterEqual, intercept);
        const solver::LpSolution sol = solver::lp_solve(master);
        if (sol.status != solver::LpStatus::Optimal) throw SolverError("expectation master did not solve");
        const double lower = sol.x[theta];
        if (upper - lower <= 1e-9 * std::max(1.0, std::abs(upper))) break;
        x.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(n));
        for (double& v : x) v = std::max(v, 0.0);
    }
    return {best_x};
}

Schedule solve_expectation_direct(const ASPInstance& instance, const ScenarioSet& scenarios) {
    instance.validate();
    scenarios.validate();
    const std::size_t n = instance.n;
    solver::LpProblem lp;
    std::vector<solver::Term> sum;
    for (std::size_t k = 0; k < n; ++k) {
        lp.add_variable(0.0);
        sum.push_back({k, 1.0});
    }
    lp.add_row(std::move(sum), solver::Sense::Equal, instance.T_h);
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const double w = scenarios.weights[i];
        // w_2..w_{n+1} then u_1..u_n for this scenario
        const std::size_t w0 = lp.num_vars();
        for (std::size_t k = 1; k <= n; ++k) lp.add_variable(w * (k < n ? instance.c_w[k] : instance.c_o));
        const std::size_t u0 = lp.num_vars();
        for (std::size_t k = 0; k < n; ++k) lp.add_variable(w * instance.c_u[k]);
        for (std::size_t k = 0; k < n; ++k) {
            // w_{k+2} - w_{k+1} - u_{k+1} + x_{k+1} = s_{k+1}
            std::vector<solver::Term> t{{w0 + k, 1.0}, {u0 + k, -1.0}, {k, 1.0}};
            if (k > 0) t.push_back({w0 + k - 1, -1.0});
            lp.add_row(std::move(t), solver::Sense::Equal, scenarios.xi[i][k]);
        }
    }
    const solver::LpSolution sol = solver::lp_solve(lp);
    if (sol.status != solver::LpStatus::Optimal) throw SolverError("expectation LP did not solve");
    Schedule s;
    s.x.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(n));
    return s;
}

Perturbation parse_perturbation(const std::string& name) {
    if (name == "none") return Perturbation::None;
    if (name == "set1") return Perturbation::SetI;
    if (name == "set2") return Perturbation::SetII;
    throw InvalidArgument("unknown perturbation '" + name + "'");
}

const char* to_string(Perturbation p) {
    switch (p) {
        case Perturbation::None: return "none";
        case Perturbation::SetI: return "set1";
        case Perturbation::SetII: return "set2";
    }
    return "?";
}

std::vector<SlotDistribution> perturb(std::vector<SlotDistribution> slots, Perturbation p) {
    for (auto& d : slots) {
        if (p == Perturbation::SetI) d.sd *= std::sqrt(1.5);
        if (p == Perturbation::SetII) d.mean *= 1.2;
    }
    return slots;
}

OosSummary out_of_sample(const ASPInstance& instance, const Schedule& schedule, const GenConfig& config,
                         Perturbation perturbation, std::size_t n_oos, std::uint64_t seed) {
    if (n_oos == 0) throw InvalidArgument("out_of_sample: sample size must be positive");
    if (!is_feasible(instance, schedule)) throw InvalidArgument("out_of_sample: schedule is infeasible");
    const auto slots = perturb(slot_distributions(config), perturbation);
    if (slots.size() != instance.n) throw InvalidArgument("out_of_sample: config and instance disagree on n");
    std::mt19937_64 rng(seed);
    OosSummary out;
    out.costs.resize(n_oos);
    std::vector<double> s(instance.n);
    for (auto& c : out.costs) {
        for (std::size_t k = 0; k < slots.size(); ++k) s[k] = draw_lognormal(rng, slots[k].mean, slots[k].sd);
        c = recourse_cost(instance, schedule.x, s);
    }
    const WeightVector w = uniform_weights(n_oos);
    out.mean = weighted_mean(out.costs, w);
    long double ss = 0.0L;
    for (double c : out.costs) ss += (c - out.mean) * (c - out.mean);
    out.sd = n_oos > 1 ? std::sqrt(static_cast<double>(ss / static_cast<long double>(n_oos - 1))) : 0.0;
    out.p50 = weighted_quantile(out.costs, w, 0.50).value;
    out.p90 = weighted_quantile(out.costs, w, 0.90).value;
    out.p95 = weighted_quantile(out.costs, w, 0.95).value;
    return out;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const char* p : {"a", "b", "c"})
        for (const char* nu : {"2", "5"})
            for (const char* R : {"5", "10"}) out.push_back(std::string("table5-") + p + "-nu" + nu + "-R" + R);
    for (const char* s : {"figure2", "subsample-sweep", "bandwidth-sweep", "timing-n6"}) out.push_back(s);
    return out;
}

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig c;
    c.preset = name;
    c.sicg.eps = 0.05;
    c.sicg.eps_tilde = 0.015;
    c.sicg.total_time_limit = 60.0;
    if (name.rfind("table5-", 0) == 0) {
        // table5-<p>-nu<2|5>-R<5|10>
        const auto parts = name.substr(7);
        const auto d1 = parts.find('-');
        const auto d2 = parts.find('-', d1 + 1);
        if (d1 == std::string::npos || d2 == std::string::npos) throw InvalidArgument("malformed preset '" + name + "'");
        const std::string p = parts.substr(0, d1), nu = parts.substr(d1 + 1, d2 - d1 - 1), R = parts.substr(d2 + 1);
        if (p != "a" && p != "b" && p != "c") throw InvalidArgument("unknown preset '" + name + "'");
        if (nu == "nu2") c.gen.nu = 0.2;
        else if (nu == "nu5") c.gen.nu = 0.5;
        else throw InvalidArgument("unknown preset '" + name + "'");
        if (R == "R5") c.gen.R = 0.5;
        else if (R == "R10") c.gen.R = 1.0;
        else throw InvalidArgument("unknown preset '" + name + "'");
        c.predictors = {p};
        c.extra = {{"cso", "expectation"}};
        c.perturbations = {Perturbation::None, Perturbation::SetI, Perturbation::SetII};
        return c;
    }
    if (name == "figure2") {
        c.predictors = {"a", "b", "c"};
        c.objectives = {"quantile", "expectation"};
        return c;
    }
    if (name == "subsample-sweep") {
        c.methods = {"cso", "saa"};
        c.sweep = "n_sub";
        c.sweep_values = {10, 20, 50, 100, 200, 500, 1000};
        return c;
    }
    if (name == "bandwidth-sweep") {
        c.methods = {"cso"};
        c.objectives = {"quantile", "expectation"};
        c.sweep = "bandwidth";
        for (int k = 1; k <= 11; ++k) c.sweep_values.push_back(0.2 * k);
        return c;
    }
    if (name == "timing-n6") {
        c.gen.predictor_kind = PredictorKind::IidMeans;
        c.predictors = {"iid"};
        c.methods = {"iid"};
        c.reps = 30;
        c.sweep = "n_sub";
        c.sweep_values = {200, 500};
        c.sicg.eps = 0.02;
        c.sicg.total_time_limit = 3600.0;
        c.n_oos = 1000;
        return c;
    }
    throw InvalidArgument("unknown preset '" + name + "'");
}

namespace {

struct Task {
    std::string predictor;
    double sweep_value;
    std::size_t rep;
};

std::vector<RunRecord> run_task(const ExperimentConfig& cfg, const Task& task, const Dataset& pool) {
    GenConfig gen = cfg.gen;
    if (gen.predictor_kind == PredictorKind::Fixed) gen.predictor = named_predictor(task.predictor, gen.n);
    else gen.seed = stream_seed(cfg.gen.seed, "instance", task.rep);
    const ASPInstance instance = make_instance(gen);

    std::size_t n_sub = cfg.n_sub;
    double h = cfg.bandwidth;
    if (cfg.sweep == "n_sub") n_sub = static_cast<std::size_t>(task.sweep_value);
    if (cfg.sweep == "bandwidth") h = task.sweep_value;

    std::vector<std::pair<std::string, std::string>> runs;
    for (const auto& m : cfg.methods)
        for (const auto& o : cfg.objectives) runs.emplace_back(m, o);
    for (const auto& e : cfg.extra)
        if (std::find(runs.begin(), runs.end(), e) == runs.end()) runs.push_back(e);

    const std::uint64_t base = cfg.gen.seed;
    std::map<std::string, ScenarioSet> scenario_cache;
    auto scenarios_for = [&](const std::string& method) -> const ScenarioSet& {
        auto it = scenario_cache.find(method);
        if (it != scenario_cache.end()) return it->second;
        ScenarioSet s;
        if (method == "cso") s = cso_subsample(pool, gen.predictor, h, n_sub, stream_seed(base, "subsample-cso", task.rep));
        else if (method == "saa") s = saa_subsample(pool, gen.n, n_sub, stream_seed(base, "subsample-saa", task.rep));
        else if (method == "true" || method == "iid") s = true_scenarios(gen, n_sub, stream_seed(base, "true", task.rep));
        else throw InvalidArgument("unknown method '" + method + "'");
        return scenario_cache.emplace(method, std::move(s)).first->second;
    };

    std::vector<RunRecord> out;
    for (const auto& [method, objective] : runs) {
        const ScenarioSet& sc = scenarios_for(method);
        RunRecord rec;
        rec.predictor = task.predictor;
        rec.sweep_value = task.sweep_value;
        rec.rep = task.rep;
        rec.method = method;
        rec.objective = objective;
        const auto t0 = std::chrono::steady_clock::now();
        if (objective == "quantile") {
            SiCGParams p = cfg.sicg;
            p.tau = cfg.tau;
            p.seed = stream_seed(base, "sicg", task.rep);
            const SiCGResult r = sicg_solve(instance, sc, p);
            rec.x = r.schedule.x;
            rec.in_sample = r.objective;
            rec.gap = r.gap;
            rec.converged = r.converged;
            rec.trace = r.trace;
        } else if (objective == "expectation") {
            rec.x = solve_expectation(instance, sc).x;
            rec.in_sample = expected_cost(instance, sc, rec.x);
        } else {
            throw InvalidArgument("unknown objective '" + objective + "'");
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (Perturbation p : cfg.perturbations) {
            OosSummary s = out_of_sample(instance, {rec.x}, gen, p, cfg.n_oos, stream_seed(base, "oos", task.rep));
            s.costs.clear();
            rec.oos.emplace(to_string(p), std::move(s));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.gen.validate();
    if (config.reps == 0) throw InvalidArgument("run_experiment: replications must be positive");
    std::vector<double> sweep = config.sweep == "none" ? std::vector<double>{0.0} : config.sweep_values;
    if (sweep.empty()) throw InvalidArgument("run_experiment: sweep without values");

    // one historical data set per replication, shared by every predictor and sweep point
    std::vector<Dataset> pools(config.reps);
    if (config.gen.predictor_kind == PredictorKind::Fixed) {
        for (std::size_t r = 0; r < config.reps; ++r) {
            GenConfig g = config.gen;
            g.seed = stream_seed(config.gen.seed, "data", r);
            pools[r] = generate_pool(g);
        }
    }

    std::vector<Task> tasks;
    for (const auto& p : config.predictors)
        for (double v : sweep)
            for (std::size_t r = 0; r < config.reps; ++r) tasks.push_back({p, v, r});

    std::vector<std::vector<RunRecord>> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (std::size_t t = next++; t < tasks.size(); t = next++) {
            try {
                results[t] = run_task(config, tasks[t], pools[tasks[t].rep]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    const unsigned jobs = std::max(1u, config.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (unsigned j = 0; j < jobs; ++j) threads.emplace_back(worker);
        for (auto& th : threads) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    ExperimentReport report;
    report.config = config;
    for (auto& r : results)
        for (auto& rec : r) report.records.push_back(std::move(rec));
    return report;
}

}  // namespace cqm::lab
