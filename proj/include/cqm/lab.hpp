#pragma once

// Synthetic appointment data, CSO/SAA scenario pipelines, the expectation
// baseline, out-of-sample evaluation and experiment presets.

#include "cqm/asp.hpp"
#include "cqm/estimator.hpp"
#include "cqm/scenario.hpp"
#include "cqm/sicg.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cqm::lab {

enum class PredictorKind {
    Fixed,    // one characteristic per slot; slot mean is mu_base + z
    IidMeans  // slot means drawn from U[36, 44]; no characteristics
};

struct GenConfig {
    std::size_t n = 6;
    double nu = 0.2;
    double R = 0.5;
    double mu_base = 40.0;
    PredictorKind predictor_kind = PredictorKind::Fixed;
    std::vector<double> predictor;  // length n for Fixed; empty means all zeros
    std::size_t N = 10000;
    std::uint64_t seed = 1;
    double cost_unit = 1.0;  // c_u : c_w : c_o = 0.5 : 1 : 10 times this

    void validate() const;
};

/// Named predictors: "a" all zeros, "b" increasing, "c" decreasing (n = 6).
std::vector<double> named_predictor(const std::string& name, std::size_t n = 6);

struct SlotDistribution {
    double mean = 0.0;
    double sd = 0.0;
};

struct LognormalParams {
    double mu_log = 0.0;
    double sigma_log = 0.0;
};

/// Log-space parameters whose draws have the given mean and sd.
LognormalParams lognormal_params(double mean, double sd);

/// Lognormal tau-quantile for the given moments.
double lognormal_quantile(double mean, double sd, double tau);

/// Per-slot true conditional distributions for the config.
std::vector<SlotDistribution> slot_distributions(const GenConfig& config);

/// sum of means + R * sqrt(sum of variances).
double horizon(const GenConfig& config);

ASPInstance make_instance(const GenConfig& config);

/// N records with z ~ U[-15, 15] and s ~ lognormal(mean mu_base + z, sd nu * mu_base).
Dataset generate_pool(const GenConfig& config);

/// Per-slot indicator-kernel filter |z - query_k| <= h, then n_sub joint
/// scenarios from independent uniform per-slot draws with replacement.
ScenarioSet cso_subsample(const Dataset& pool, std::span<const double> query, double bandwidth, std::size_t n_sub,
                          std::uint64_t seed);

/// Like cso_subsample with no filter.
ScenarioSet saa_subsample(const Dataset& pool, std::size_t n, std::size_t n_sub, std::uint64_t seed);

/// Scenarios drawn from the true conditional distributions.
ScenarioSet true_scenarios(const GenConfig& config, std::size_t n_sub, std::uint64_t seed);

/// min_x sum_i w_i f(x, xi^i) by aggregated Benders cuts.
Schedule solve_expectation(const ASPInstance& instance, const ScenarioSet& scenarios);

/// The same problem as one LP with a recourse copy per scenario.
Schedule solve_expectation_direct(const ASPInstance& instance, const ScenarioSet& scenarios);

double expected_cost(const ASPInstance& instance, const ScenarioSet& scenarios, std::span<const double> x);

enum class Perturbation { None, SetI, SetII };

Perturbation parse_perturbation(const std::string& name);
const char* to_string(Perturbation p);

/// Set I: sd * sqrt(1.5). Set II: mean * 1.2, sd unchanged.
std::vector<SlotDistribution> perturb(std::vector<SlotDistribution> slots, Perturbation p);

struct OosSummary {
    double mean = 0.0;
    double sd = 0.0;
    double p50 = 0.0;
    double p90 = 0.0;
    double p95 = 0.0;
    std::vector<double> costs;
};

OosSummary out_of_sample(const ASPInstance& instance, const Schedule& schedule, const GenConfig& config,
                         Perturbation perturbation, std::size_t n_oos, std::uint64_t seed);

/// Independent seed for a named stream (pool, subsample, oos, sicg, ...).
std::uint64_t stream_seed(std::uint64_t base, const std::string& stream, std::uint64_t index = 0);

struct ExperimentConfig {
    std::string preset;
    GenConfig gen;
    std::vector<std::string> predictors{"b"};
    std::size_t reps = 20;
    std::size_t n_sub = 1000;
    double bandwidth = 1.0;
    double tau = 0.95;
    std::size_t n_oos = 10000;
    std::vector<std::string> methods{"cso", "saa", "true"};
    std::vector<std::string> objectives{"quantile"};
    /// Extra (method, objective) pairs, e.g. {"cso", "expectation"}.
    std::vector<std::pair<std::string, std::string>> extra;
    std::vector<Perturbation> perturbations{Perturbation::None};
    /// Sweep axis: "none", "n_sub" or "bandwidth".
    std::string sweep = "none";
    std::vector<double> sweep_values;
    SiCGParams sicg;
    unsigned jobs = 1;
};

/// Known presets: table5-<a|b|c>-nu<2|5>-R<5|10>, figure2, subsample-sweep,
/// bandwidth-sweep, timing-n6. Throws InvalidArgument otherwise.
ExperimentConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

struct RunRecord {
    std::string predictor;
    double sweep_value = 0.0;
    std::size_t rep = 0;
    std::string method;     // cso, saa, true, milp
    std::string objective;  // quantile, expectation
    std::vector<double> x;
    double in_sample = 0.0;
    double gap = 0.0;
    bool converged = true;
    double seconds = 0.0;
    std::map<std::string, OosSummary> oos;  // keyed by perturbation name
    std::vector<TraceRow> trace;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<RunRecord> records;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Writes schedules.csv, oos_summary.csv, trace/*.csv and metadata.json into dir.
void write_report(const ExperimentReport& report, const std::string& dir);

}  // namespace cqm::lab
