#include "cqm/io.hpp"

#include "cqm/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cqm::io {

using nlohmann::json;

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& cell, std::size_t line_no) {
    double v = 0.0;
    const char* b = cell.data();
    const char* e = b + cell.size();
    if (!cell.empty() && *b == '+') ++b;
    const auto res = std::from_chars(b, e, v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != e || !std::isfinite(v))
        throw DataError("line " + std::to_string(line_no) + ": '" + cell + "' is not a finite number");
    return v;
}

// Header plus numeric rows of a fixed width.
std::vector<std::vector<double>> read_table(std::istream& in, std::vector<std::string>& header) {
    std::string line;
    std::size_t line_no = 0;
    header.clear();
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split(trim(line));
            break;
        }
    }
    if (header.empty()) throw DataError("CSV input is empty");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto cells = split(t);
        if (cells.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(cells.size()));
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_number(c, line_no));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

Dataset read_dataset(std::istream& in) {
    std::vector<std::string> header;
    const auto rows = read_table(in, header);
    if (header != std::vector<std::string>{"z", "s"}) throw DataError("dataset header must be 'z,s'");
    Dataset out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!(rows[r][1] > 0.0)) throw DataError("row " + std::to_string(r + 1) + ": duration must be positive");
        out.push_back({rows[r][0], rows[r][1]});
    }
    if (out.empty()) throw DataError("dataset has no records");
    return out;
}

void write_dataset(std::ostream& out, const Dataset& data) {
    out << "z,s\n";
    for (const auto& r : data) out << fmt(r.z) << ',' << fmt(r.s) << '\n';
}

ScenarioSet read_scenarios(std::istream& in) {
    std::vector<std::string> header;
    const auto rows = read_table(in, header);
    if (header.size() < 2 || header[0] != "w") throw DataError("scenario header must be 'w,s_1,...,s_n'");
    for (std::size_t k = 1; k < header.size(); ++k)
        if (header[k] != "s_" + std::to_string(k)) throw DataError("scenario header column " + std::to_string(k + 1) + " must be 's_" + std::to_string(k) + "'");
    if (rows.empty()) throw DataError("scenario file has no rows");
    ScenarioSet out;
    long double sum = 0.0L;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r][0] < 0.0) throw DataError("row " + std::to_string(r + 1) + ": negative weight");
        for (std::size_t k = 1; k < rows[r].size(); ++k)
            if (rows[r][k] < 0.0) throw DataError("row " + std::to_string(r + 1) + ": negative duration");
        out.weights.push_back(rows[r][0]);
        sum += rows[r][0];
        out.xi.emplace_back(rows[r].begin() + 1, rows[r].end());
    }
    if (std::abs(static_cast<double>(sum) - 1.0) > 1e-6)
        throw DataError("scenario weights sum to " + fmt(static_cast<double>(sum)) + ", not 1");
    for (double& w : out.weights) w = static_cast<double>(w / sum);
    return out;
}

void write_scenarios(std::ostream& out, const ScenarioSet& scenarios) {
    out << 'w';
    for (std::size_t k = 1; k <= scenarios.dim(); ++k) out << ",s_" << k;
    out << '\n';
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        out << fmt(scenarios.weights[i]);
        for (double s : scenarios.xi[i]) out << ',' << fmt(s);
        out << '\n';
    }
}

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return in;
}

}  // namespace

Dataset read_dataset_file(const std::string& path) {
    auto in = open_in(path);
    return read_dataset(in);
}

ScenarioSet read_scenarios_file(const std::string& path) {
    auto in = open_in(path);
    return read_scenarios(in);
}

json read_json_file(const std::string& path) {
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("'" + path + "': " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
}

json to_json(const ASPInstance& instance) {
    return {{"n", instance.n}, {"c_u", instance.c_u}, {"c_w", instance.c_w}, {"c_o", instance.c_o}, {"T_h", instance.T_h}};
}

ASPInstance instance_from_json(const json& j) {
    try {
        ASPInstance inst;
        inst.n = j.at("n").get<std::size_t>();
        inst.c_u = j.at("c_u").get<std::vector<double>>();
        inst.c_w = j.at("c_w").get<std::vector<double>>();
        inst.c_o = j.at("c_o").get<double>();
        inst.T_h = j.at("T_h").get<double>();
        inst.validate();
        return inst;
    } catch (const json::exception& e) {
        throw DataError(std::string("instance JSON: ") + e.what());
    }
}

lab::GenConfig gen_from_json(const json& j) {
    lab::GenConfig g;
    try {
        g.n = j.value("n", g.n);
        g.nu = j.value("nu", g.nu);
        g.R = j.value("R", g.R);
        g.mu_base = j.value("mu_base", g.mu_base);
        g.N = j.value("N", g.N);
        g.seed = j.value("seed", g.seed);
        g.cost_unit = j.value("cost_unit", g.cost_unit);
        if (j.contains("predictor")) {
            const json& p = j.at("predictor");
            if (p.is_string()) {
                const std::string name = p.get<std::string>();
                if (name == "iid") {
                    g.predictor_kind = lab::PredictorKind::IidMeans;
                } else {
                    g.predictor = lab::named_predictor(name, g.n);
                }
            } else {
                g.predictor = p.get<std::vector<double>>();
            }
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("config JSON: ") + e.what());
    }
    g.validate();
    return g;
}

json to_json(const lab::GenConfig& c) {
    json j = {{"n", c.n}, {"nu", c.nu}, {"R", c.R}, {"mu_base", c.mu_base}, {"N", c.N}, {"seed", c.seed},
              {"cost_unit", c.cost_unit}};
    if (c.predictor_kind == lab::PredictorKind::IidMeans) j["predictor"] = "iid";
    else j["predictor"] = c.predictor.empty() ? std::vector<double>(c.n, 0.0) : c.predictor;
    return j;
}

ASPInstance resolve_instance(const json& j) {
    if (j.contains("c_u")) return instance_from_json(j);
    if (j.contains("instance")) return instance_from_json(j.at("instance"));
    return lab::make_instance(gen_from_json(j));
}

void apply_sicg_json(const json& j, SiCGParams& p) {
    if (!j.contains("sicg")) return;
    const json& s = j.at("sicg");
    try {
        p.eps = s.value("eps", p.eps);
        p.eps_tilde = s.value("eps_tilde", p.eps_tilde);
        p.eps_mp0 = s.value("eps_mp0", p.eps_mp0);
        p.alpha = s.value("alpha", p.alpha);
        if (s.contains("kappa")) p.kappa = s.at("kappa").is_null() ? std::nullopt : std::optional<double>(s.at("kappa").get<double>());
        if (s.contains("beta")) p.beta = s.at("beta").is_null() ? std::nullopt : std::optional<double>(s.at("beta").get<double>());
        if (s.contains("time_limit")) p.total_time_limit = s.at("time_limit").get<double>();
        if (s.contains("max_iterations")) p.max_iterations = s.at("max_iterations").get<std::size_t>();
        if (s.contains("big_m")) p.big_m = s.at("big_m").get<double>();
        if (s.contains("engine")) {
            const std::string e = s.at("engine").get<std::string>();
            if (e == "cover") p.engine = MasterEngine::Cover;
            else if (e == "dense") p.engine = MasterEngine::Dense;
            else throw DataError("config JSON: unknown master engine '" + e + "'");
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("config JSON: ") + e.what());
    }
}

json to_json(const SiCGParams& p) {
    json j = {{"eps", p.eps}, {"eps_tilde", p.eps_tilde}, {"eps_mp0", p.eps_mp0}, {"alpha", p.alpha},
              {"engine", p.engine == MasterEngine::Cover ? "cover" : "dense"}};
    j["kappa"] = p.kappa ? json(*p.kappa) : json(nullptr);
    j["beta"] = p.beta ? json(*p.beta) : json(nullptr);
    if (p.total_time_limit) j["time_limit"] = *p.total_time_limit;
    if (p.max_iterations) j["max_iterations"] = *p.max_iterations;
    if (p.big_m) j["big_m"] = *p.big_m;
    return j;
}

}  // namespace cqm::io
