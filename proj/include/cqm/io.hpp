#pragma once

// CSV and JSON formats: datasets, scenario sets, configs, instances, schedules.

#include "cqm/asp.hpp"
#include "cqm/estimator.hpp"
#include "cqm/lab.hpp"
#include "cqm/scenario.hpp"
#include "cqm/sicg.hpp"

#include "json.hpp"

#include <istream>
#include <ostream>
#include <string>

namespace cqm::io {

inline constexpr const char* kToolVersion = "0.3.0";

/// Header `z,s`.
Dataset read_dataset(std::istream& in);
void write_dataset(std::ostream& out, const Dataset& data);

/// Header `w,s_1,...,s_n`. Weights summing to one within 1e-6 are renormalised;
/// anything further off is a DataError.
ScenarioSet read_scenarios(std::istream& in);
void write_scenarios(std::ostream& out, const ScenarioSet& scenarios);

Dataset read_dataset_file(const std::string& path);
ScenarioSet read_scenarios_file(const std::string& path);
nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

nlohmann::json to_json(const ASPInstance& instance);
ASPInstance instance_from_json(const nlohmann::json& j);

/// Generator settings: n, nu, R, mu_base, predictor ("a"|"b"|"c"|"iid"|array), N, seed.
lab::GenConfig gen_from_json(const nlohmann::json& j);
nlohmann::json to_json(const lab::GenConfig& config);

/// An explicit instance (fields n, c_u, c_w, c_o, T_h), an "instance" member,
/// or one derived from generator settings.
ASPInstance resolve_instance(const nlohmann::json& j);

/// Reads the optional "sicg" member; missing fields keep their defaults.
void apply_sicg_json(const nlohmann::json& j, SiCGParams& params);
nlohmann::json to_json(const SiCGParams& params);

/// Number formatting shared by every writer: shortest round-trip form.
std::string fmt(double v);

}  // namespace cqm::io
