#include "cqm/cli.hpp"

#include "cqm/asp.hpp"
#include "cqm/errors.hpp"
#include "cqm/io.hpp"
#include "cqm/lab.hpp"
#include "cqm/report.hpp"
#include "cqm/sicg.hpp"
#include "cqm/twostage.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <optional>
#include <sstream>

namespace cqm::cli {

using nlohmann::json;

namespace {

struct Options {
    // gen-data
    std::string config, out, scenarios_out, instance_out, method = "cso";
    std::size_t n_sub = 1000;
    double bandwidth = 1.0;
    std::uint64_t seed = 0;
    // solve
    std::string solve_method = "sicg", scenarios, instance, trace, engine = "cover";
    double tau = 0.95, gap = 0.02, time_limit = 0.0;
    // evaluate
    std::string schedule, perturb = "none";
    std::size_t n_oos = 10000;
    // experiment / report
    std::string preset, in_dir;
    std::size_t reps = 20;
    unsigned jobs = 1;
};

void emit_error(std::ostream& err, const char* kind, const std::string& message, int code) {
    json j = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
    err << j.dump() << '\n';
}

json load_config(const std::string& path) { return path.empty() ? json::object() : io::read_json_file(path); }

lab::GenConfig gen_config(const json& cfg, const CLI::App& cmd, const Options& o) {
    lab::GenConfig g = io::gen_from_json(cfg);
    if (cmd.count("--seed")) g.seed = o.seed;
    return g;
}

int cmd_gen_data(const CLI::App& cmd, const Options& o, std::ostream& out) {
    const json cfg = load_config(o.config);
    const lab::GenConfig g = gen_config(cfg, cmd, o);
    const Dataset pool = lab::generate_pool(g);
    {
        std::ofstream f(o.out, std::ios::binary);
        if (!f) throw DataError("cannot write '" + o.out + "'");
        io::write_dataset(f, pool);
    }
    json summary = {{"pool", o.out}, {"records", pool.size()}};
    if (!o.scenarios_out.empty()) {
        const std::size_t n_sub = cmd.count("--n-sub") ? o.n_sub : cfg.value("n_sub", o.n_sub);
        const double h = cmd.count("--bandwidth") ? o.bandwidth : cfg.value("bandwidth", o.bandwidth);
        const std::string method = cmd.count("--method") ? o.method : cfg.value("method", o.method);
        const std::uint64_t sub_seed = lab::stream_seed(g.seed, "subsample-" + method);
        ScenarioSet sc;
        if (method == "cso") {
            std::vector<double> query = g.predictor.empty() ? std::vector<double>(g.n, 0.0) : g.predictor;
            sc = lab::cso_subsample(pool, query, h, n_sub, sub_seed);
        } else if (method == "saa") {
            sc = lab::saa_subsample(pool, g.n, n_sub, sub_seed);
        } else {
            sc = lab::true_scenarios(g, n_sub, lab::stream_seed(g.seed, "true"));
        }
        std::ofstream f(o.scenarios_out, std::ios::binary);
        if (!f) throw DataError("cannot write '" + o.scenarios_out + "'");
        io::write_scenarios(f, sc);
        summary["scenarios"] = o.scenarios_out;
        summary["scenario_count"] = sc.size();
        summary["method"] = method;
    }
    if (!o.instance_out.empty()) {
        json inst = io::to_json(lab::make_instance(g));
        inst["generator"] = io::to_json(g);
        io::write_text_file(o.instance_out, inst.dump(2) + "\n");
        summary["instance"] = o.instance_out;
    }
    out << summary.dump() << '\n';
    return kOk;
}

int cmd_solve(const CLI::App& cmd, const Options& o, std::ostream& out) {
    const json cfg = io::read_json_file(o.instance);
    const ASPInstance instance = io::resolve_instance(cfg);
    const ScenarioSet sc = io::read_scenarios_file(o.scenarios);
    if (sc.dim() != instance.n) throw DataError("scenario width does not match the instance size");

    // config equivalents of the flags live under "solve"; tau may also sit at top level
    const json sj = cfg.contains("solve") ? cfg.at("solve") : json::object();
    std::string method;
    double tau = 0.0, gap = 0.0;
    std::uint64_t seed = 0;
    std::optional<double> time_limit;
    std::string engine;
    try {
        method = cmd.count("--method") ? o.solve_method : sj.value("method", o.solve_method);
        tau = cmd.count("--tau") ? o.tau : sj.value("tau", cfg.value("tau", o.tau));
        gap = cmd.count("--gap") ? o.gap : sj.value("gap", o.gap);
        seed = cmd.count("--seed") ? o.seed : sj.value("seed", std::uint64_t{0});
        if (cmd.count("--time-limit")) time_limit = o.time_limit;
        else if (sj.contains("time_limit")) time_limit = sj.at("time_limit").get<double>();
        engine = cmd.count("--engine") ? o.engine : sj.value("engine", std::string{});
    } catch (const json::exception& e) {
        throw DataError(std::string("config JSON: ") + e.what());
    }
    if (!(tau > 0.0 && tau <= 1.0)) throw InvalidArgument("tau must lie in (0, 1]");
    if (!(gap > 0.0)) throw InvalidArgument("gap must be positive");

    json result = {{"tool", "cqm"}, {"version", io::kToolVersion}, {"method", method}, {"seed", seed}, {"tau", tau}};
    std::vector<double> x;
    if (method == "sicg") {
        SiCGParams p;
        io::apply_sicg_json(cfg, p);
        p.eps = gap;
        if (!(p.eps_tilde < gap / (1.0 + gap))) p.eps_tilde = 0.75 * gap / (1.0 + gap);
        p.tau = tau;
        p.seed = seed;
        if (time_limit) p.total_time_limit = time_limit;
        if (engine == "dense") p.engine = MasterEngine::Dense;
        else if (engine == "cover") p.engine = MasterEngine::Cover;
        else if (!engine.empty()) throw InvalidArgument("unknown master engine '" + engine + "'");
        const SiCGResult r = sicg_solve(instance, sc, p);
        x = r.schedule.x;
        result["objective"] = r.objective;
        result["lower_bound"] = r.lower_bound;
        result["gap"] = r.gap;
        result["converged"] = r.converged;
        result["iterations"] = r.iterations;
        result["pool_size"] = r.pool.size();
        if (!o.trace.empty()) io::write_text_file(o.trace, trace_csv(r.trace));
    } else if (method == "milp") {
        const TwoStageLP problem = to_two_stage(instance);
        const double M = cfg.contains("big_m") ? cfg.at("big_m").get<double>() : big_m_bound(instance, sc);
        const QuantileMilp model = build_direct_milp(problem, sc, tau, M);
        solver::MilpOptions mo;
        mo.rel_gap = gap;
        mo.time_limit = time_limit;
        const solver::MilpResult r = solver::milp_solve(model.milp, mo);
        if (!r.incumbent) throw SolverError(std::string("direct MILP ended without a schedule: ") + solver::to_string(r.status));
        x = model.x_of(*r.incumbent);
        for (double& v : x) v = std::max(v, 0.0);
        result["objective"] = r.objective;
        result["lower_bound"] = r.lower_bound;
        result["gap"] = r.gap;
        result["converged"] = r.status == solver::MilpStatus::Optimal || r.status == solver::MilpStatus::GapReached;
        result["big_m"] = M;
        result["nodes"] = r.node_count;
    } else if (method == "expectation") {
        x = lab::solve_expectation(instance, sc).x;
        result["objective"] = lab::expected_cost(instance, sc, x);
        result["lower_bound"] = result["objective"];
        result["gap"] = 0.0;
        result["converged"] = true;
    } else {
        throw InvalidArgument("unknown method '" + method + "'");
    }
    result["x"] = x;
    result["quantile_at_x"] = quantile_objective(instance, sc, x, tau).value;
    result["instance"] = io::to_json(instance);
    if (cfg.contains("generator")) result["generator"] = cfg.at("generator");
    else if (!cfg.contains("c_u") && !cfg.contains("instance")) result["generator"] = io::to_json(io::gen_from_json(cfg));
    io::write_text_file(o.out, result.dump(2) + "\n");
    out << json{{"out", o.out}, {"objective", result["objective"]}, {"gap", result["gap"]}}.dump() << '\n';
    return kOk;
}

int cmd_evaluate(const CLI::App& cmd, const Options& o, std::ostream& out) {
    const json sched = io::read_json_file(o.schedule);
    ASPInstance instance;
    Schedule s;
    try {
        instance = io::instance_from_json(sched.at("instance"));
        s.x = sched.at("x").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw DataError(std::string("schedule JSON: ") + e.what());
    }
    json gen_json = json::object();
    if (!o.config.empty()) gen_json = io::read_json_file(o.config);
    else if (sched.contains("generator")) gen_json = sched.at("generator");
    lab::GenConfig g = io::gen_from_json(gen_json);
    if (g.n != instance.n) throw DataError("generator settings and schedule disagree on n");
    const std::uint64_t seed = cmd.count("--seed") ? o.seed : g.seed;
    const lab::Perturbation p = lab::parse_perturbation(o.perturb);
    const lab::OosSummary r = lab::out_of_sample(instance, s, g, p, o.n_oos, lab::stream_seed(seed, "oos"));
    json j = {{"perturbation", lab::to_string(p)}, {"n_oos", o.n_oos}, {"mean", r.mean}, {"sd", r.sd},
              {"p50", r.p50}, {"p90", r.p90}, {"p95", r.p95}};
    if (!o.out.empty()) io::write_text_file(o.out, j.dump(2) + "\n");
    out << j.dump() << '\n';
    return kOk;
}

int cmd_experiment(const CLI::App& cmd, const Options& o, std::ostream& out) {
    lab::ExperimentConfig c = lab::preset_config(o.preset);
    if (!o.config.empty()) {
        const json cfg = io::read_json_file(o.config);
        c.gen = io::gen_from_json(cfg);
        c.reps = cfg.value("reps", c.reps);
        c.n_sub = cfg.value("n_sub", c.n_sub);
        c.bandwidth = cfg.value("bandwidth", c.bandwidth);
        c.tau = cfg.value("tau", c.tau);
        c.n_oos = cfg.value("n_oos", c.n_oos);
        c.jobs = cfg.value("jobs", c.jobs);
        io::apply_sicg_json(cfg, c.sicg);
        // presets fix the noise level and slack; keep them unless the file names them
        const lab::ExperimentConfig base = lab::preset_config(o.preset);
        if (!cfg.contains("nu")) c.gen.nu = base.gen.nu;
        if (!cfg.contains("R")) c.gen.R = base.gen.R;
        c.gen.predictor_kind = base.gen.predictor_kind;
    }
    if (cmd.count("--reps")) c.reps = o.reps;
    if (cmd.count("--jobs")) c.jobs = o.jobs;
    if (cmd.count("--seed")) c.gen.seed = o.seed;
    if (cmd.count("--n-oos")) c.n_oos = o.n_oos;
    if (cmd.count("--time-limit")) c.sicg.total_time_limit = o.time_limit;
    const std::string dir = o.out.empty() ? "results/" + o.preset : o.out;
    const lab::ExperimentReport rep = lab::run_experiment(c);
    lab::write_report(rep, dir);
    out << json{{"out", dir}, {"records", rep.records.size()}}.dump() << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantile-objective appointment scheduling toolkit", "cqm"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("gen-data", "Generate a historical pool (and optionally scenarios)");
    gen->add_option("--config", o.config, "Generator config JSON");
    gen->add_option("--out", o.out, "Pool CSV (z,s)")->required();
    gen->add_option("--scenarios-out", o.scenarios_out, "Also write a scenario CSV");
    gen->add_option("--method", o.method, "Scenario pipeline")->check(CLI::IsMember({"cso", "saa", "true"}));
    gen->add_option("--n-sub", o.n_sub, "Scenario count")->check(CLI::PositiveNumber);
    gen->add_option("--bandwidth", o.bandwidth, "Kernel bandwidth")->check(CLI::PositiveNumber);
    gen->add_option("--instance-out", o.instance_out, "Write the instance JSON");
    gen->add_option("--seed", o.seed, "Override the config seed");

    auto* solve = app.add_subcommand("solve", "Solve a scenario set");
    solve->add_option("--method", o.solve_method, "sicg | milp | expectation")
        ->check(CLI::IsMember({"sicg", "milp", "expectation"}));
    solve->add_option("--tau", o.tau, "Quantile level")->check(CLI::Range(1e-9, 1.0));
    solve->add_option("--gap", o.gap, "Relative gap")->check(CLI::PositiveNumber);
    solve->add_option("--scenarios", o.scenarios, "Scenario CSV")->required();
    solve->add_option("--instance", o.instance, "Instance or config JSON")->required();
    solve->add_option("--out", o.out, "Schedule JSON")->required();
    solve->add_option("--trace", o.trace, "SiCG trace CSV");
    solve->add_option("--seed", o.seed, "Random seed");
    solve->add_option("--time-limit", o.time_limit, "Wall-clock limit (s)")->check(CLI::PositiveNumber);
    solve->add_option("--engine", o.engine, "Master engine")->check(CLI::IsMember({"cover", "dense"}));

    auto* eval = app.add_subcommand("evaluate", "Out-of-sample simulation of a schedule");
    eval->add_option("--schedule", o.schedule, "Schedule JSON")->required();
    eval->add_option("--perturb", o.perturb, "none | set1 | set2")->check(CLI::IsMember({"none", "set1", "set2"}));
    eval->add_option("--n-oos", o.n_oos, "Simulated scenarios")->check(CLI::PositiveNumber);
    eval->add_option("--config", o.config, "Generator config JSON (defaults to the schedule's)");
    eval->add_option("--seed", o.seed, "Random seed");
    eval->add_option("--out", o.out, "Summary JSON");

    auto* exp = app.add_subcommand("experiment", "Run an experiment preset");
    exp->add_option("--preset", o.preset, "Preset name")->required()->check(CLI::IsMember(lab::preset_names()));
    exp->add_option("--reps", o.reps, "Replications")->check(CLI::PositiveNumber);
    exp->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    exp->add_option("--out", o.out, "Output directory");
    exp->add_option("--config", o.config, "Config JSON");
    exp->add_option("--seed", o.seed, "Base seed");
    exp->add_option("--n-oos", o.n_oos, "Out-of-sample size")->check(CLI::PositiveNumber);
    exp->add_option("--time-limit", o.time_limit, "Per-solve SiCG time limit (s)")->check(CLI::PositiveNumber);

    auto* rep = app.add_subcommand("report", "Summary tables and SVG plots from experiment CSVs");
    rep->add_option("--in", o.in_dir, "Experiment output directory")->required();
    rep->add_option("--out", o.out, "Report directory")->required();

    if (args.empty()) {
        err << app.help();
        emit_error(err, "UsageError", "no subcommand given", kUsage);
        return kUsage;
    }
    std::vector<const char*> argv{"cqm"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << app.help();
        emit_error(err, "UsageError", e.what(), kUsage);
        return kUsage;
    }

    try {
        if (*gen) return cmd_gen_data(*gen, o, out);
        if (*solve) return cmd_solve(*solve, o, out);
        if (*eval) return cmd_evaluate(*eval, o, out);
        if (*exp) return cmd_experiment(*exp, o, out);
        if (*rep) {
            report::build_report(o.in_dir, o.out);
            out << json{{"out", o.out}}.dump() << '\n';
            return kOk;
        }
    } catch (const DataError& e) {
        emit_error(err, e.kind(), e.what(), kData);
        return kData;
    } catch (const NoMass& e) {
        emit_error(err, e.kind(), e.what(), kData);
        return kData;
    } catch (const InvalidArgument& e) {
        emit_error(err, e.kind(), e.what(), kData);
        return kData;
    } catch (const Error& e) {
        emit_error(err, e.kind(), e.what(), kSolver);
        return kSolver;
    } catch (const std::exception& e) {
        emit_error(err, "InternalError", e.what(), kSolver);
        return kSolver;
    }
    return kUsage;
}

}  // namespace cqm::cli
