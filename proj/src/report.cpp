#include "cqm/report.hpp"

#include "cqm/errors.hpp"
#include "cqm/io.hpp"
#include "cqm/lab.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace cqm::lab {

namespace {

std::string sweep_label(double v) { return io::fmt(v); }

std::string run_key(const RunRecord& r) {
    return r.predictor + "_" + sweep_label(r.sweep_value) + "_" + std::to_string(r.rep) + "_" + r.method + "_" + r.objective;
}

}  // namespace

void write_report(const ExperimentReport& report, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "trace", ec);
    if (ec) throw DataError("cannot create '" + dir + "': " + ec.message());
    const std::size_t n = report.config.gen.n;

    std::ostringstream sched;
    sched << "predictor,sweep,rep,method,objective";
    for (std::size_t k = 1; k <= n; ++k) sched << ",x_" << k;
    sched << ",in_sample,gap,converged,seconds\n";
    std::ostringstream oos;
    oos << "predictor,sweep,rep,method,objective,perturbation,mean,sd,p50,p90,p95\n";
    for (const RunRecord& r : report.records) {
        sched << r.predictor << ',' << io::fmt(r.sweep_value) << ',' << r.rep << ',' << r.method << ',' << r.objective;
        for (double x : r.x) sched << ',' << io::fmt(x);
        sched << ',' << io::fmt(r.in_sample) << ',' << io::fmt(r.gap) << ',' << (r.converged ? 1 : 0) << ','
              << io::fmt(std::round(r.seconds * 1000.0) / 1000.0) << '\n';
        for (Perturbation p : report.config.perturbations) {
            const auto it = r.oos.find(to_string(p));
            if (it == r.oos.end()) continue;
            const OosSummary& s = it->second;
            oos << r.predictor << ',' << io::fmt(r.sweep_value) << ',' << r.rep << ',' << r.method << ',' << r.objective
                << ',' << it->first << ',' << io::fmt(s.mean) << ',' << io::fmt(s.sd) << ',' << io::fmt(s.p50) << ','
                << io::fmt(s.p90) << ',' << io::fmt(s.p95) << '\n';
        }
        if (!r.trace.empty())
            io::write_text_file((fs::path(dir) / "trace" / (run_key(r) + ".csv")).string(), trace_csv(r.trace));
    }
    io::write_text_file((fs::path(dir) / "schedules.csv").string(), sched.str());
    io::write_text_file((fs::path(dir) / "oos_summary.csv").string(), oos.str());

    const ExperimentConfig& c = report.config;
    nlohmann::json meta = {{"tool_version", io::kToolVersion},
                           {"preset", c.preset},
                           {"generator", io::to_json(c.gen)},
                           {"predictors", c.predictors},
                           {"reps", c.reps},
                           {"n_sub", c.n_sub},
                           {"bandwidth", c.bandwidth},
                           {"tau", c.tau},
                           {"n_oos", c.n_oos},
                           {"methods", c.methods},
                           {"objectives", c.objectives},
                           {"sweep", c.sweep},
                           {"sweep_values", c.sweep_values},
                           {"sicg", io::to_json(c.sicg)},
                           {"subsampling", "independent per-slot uniform draws with replacement"},
                           {"seed_streams", {"data", "pool", "subsample-cso", "subsample-saa", "true", "sicg", "oos"}}};
    nlohmann::json extra = nlohmann::json::array();
    for (const auto& [m, o] : c.extra) extra.push_back({m, o});
    meta["extra_runs"] = extra;
    nlohmann::json perts = nlohmann::json::array();
    for (Perturbation p : c.perturbations) perts.push_back(to_string(p));
    meta["perturbations"] = perts;
    io::write_text_file((fs::path(dir) / "metadata.json").string(), meta.dump(2) + "\n");
}

}  // namespace cqm::lab

namespace cqm::report {

namespace {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw DataError("missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
};

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(cell);
    }
    return out;
}

Table read_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path.string() + "' is empty");
    t.header = split_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != t.header.size()) throw DataError("'" + path.string() + "': ragged row");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

double num(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw DataError("not a number: '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw DataError("not a number: '" + s + "'");
    }
}

double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    return weighted_quantile(v, uniform_weights(v.size()), p).value;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Series {
    std::string label;
    std::vector<double> y;
};

std::string line_svg(const std::string& title, const std::vector<Series>& series, const std::string& xlabel,
                     const std::string& ylabel) {
    const double W = 640, H = 400, L = 60, R = 160, T = 40, B = 50;
    double lo = 1e300, hi = -1e300;
    std::size_t len = 0;
    for (const auto& s : series) {
        for (double v : s.y) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        len = std::max(len, s.y.size());
    }
    if (len == 0) return {};
    if (hi - lo < 1e-9) {
        hi += 1.0;
        lo -= 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto px = [&](std::size_t i) { return L + (len == 1 ? 0.5 : static_cast<double>(i) / (len - 1)) * (W - L - R); };
    auto py = [&](double v) { return T + (hi - v) / (hi - lo) * (H - T - B); };
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (std::size_t i = 0; i < len; ++i)
        o << "<text x=\"" << px(i) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << i + 1 << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = lo + (hi - lo) * k / 4.0;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", v);
        o << "<text x=\"" << L - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << buf << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    o << "<text x=\"14\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << (T + H - B) / 2
      << ")\">" << ylabel << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % 8];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < series[s].y.size(); ++i) o << px(i) << ',' << py(series[s].y[i]) << ' ';
        o << "\"/>\n";
        o << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (s + 1) << "\" fill=\"" << color << "\">"
          << series[s].label << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

struct BoxStat {
    std::string label;
    double q0, q1, q2, q3, q4;
};

std::string box_svg(const std::string& title, const std::vector<BoxStat>& boxes) {
    if (boxes.empty()) return {};
    const double W = std::max(400.0, 90.0 * boxes.size() + 100), H = 420, L = 60, T = 40, B = 110;
    double lo = 1e300, hi = -1e300;
    for (const auto& b : boxes) {
        lo = std::min(lo, b.q0);
        hi = std::max(hi, b.q4);
    }
    if (hi - lo < 1e-9) {
        hi += 1.0;
        lo -= 1.0;
    }
    auto py = [&](double v) { return T + (hi - v) / (hi - lo) * (H - T - B); };
    const double step = (W - L - 20) / boxes.size();
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = lo + (hi - lo) * k / 4.0;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.0f", v);
        o << "<text x=\"" << L - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << buf << "</text>\n";
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const BoxStat& b = boxes[i];
        const double cx = L + step * (i + 0.5), hw = step * 0.3;
        const char* color = kPalette[i % 8];
        o << "<line x1=\"" << cx << "\" y1=\"" << py(b.q0) << "\" x2=\"" << cx << "\" y2=\"" << py(b.q4) << "\" stroke=\"black\"/>\n";
        o << "<rect x=\"" << cx - hw << "\" y=\"" << py(b.q3) << "\" width=\"" << 2 * hw << "\" height=\""
          << std::max(1.0, py(b.q1) - py(b.q3)) << "\" fill=\"" << color << "\" fill-opacity=\"0.4\" stroke=\"" << color << "\"/>\n";
        o << "<line x1=\"" << cx - hw << "\" y1=\"" << py(b.q2) << "\" x2=\"" << cx + hw << "\" y2=\"" << py(b.q2)
          << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << cx << "\" y=\"" << H - B + 14 << "\" text-anchor=\"end\" transform=\"rotate(-40 " << cx << ' '
          << H - B + 14 << ")\">" << b.label << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string safe(std::string s) {
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
    return s;
}

}  // namespace

void build_report(const std::string& in_dir, const std::string& out_dir) {
    const Table sched = read_table(fs::path(in_dir) / "schedules.csv");
    const Table oos = read_table(fs::path(in_dir) / "oos_summary.csv");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create '" + out_dir + "': " + ec.message());

    // mean schedule per (predictor, sweep, method, objective)
    std::vector<std::size_t> xcols;
    for (std::size_t c = 0; c < sched.header.size(); ++c)
        if (sched.header[c].rfind("x_", 0) == 0) xcols.push_back(c);
    const std::size_t cp = sched.col("predictor"), cs = sched.col("sweep"), cm = sched.col("method"),
                      co = sched.col("objective"), cg = sched.col("gap"), ct = sched.col("seconds");
    struct Acc {
        std::vector<double> x;
        std::vector<double> gaps, secs;
        std::size_t count = 0;
    };
    std::map<std::vector<std::string>, Acc> groups;
    for (const auto& row : sched.rows) {
        Acc& a = groups[{row[cp], row[cs], row[cm], row[co]}];
        if (a.x.empty()) a.x.assign(xcols.size(), 0.0);
        for (std::size_t k = 0; k < xcols.size(); ++k) a.x[k] += num(row[xcols[k]]);
        a.gaps.push_back(num(row[cg]));
        a.secs.push_back(num(row[ct]));
        ++a.count;
    }
    std::ostringstream ss;
    ss << "predictor,sweep,method,objective,count";
    for (std::size_t k = 1; k <= xcols.size(); ++k) ss << ",mean_x_" << k;
    ss << ",median_gap,median_seconds\n";
    std::map<std::string, std::vector<Series>> per_predictor;
    for (auto& [key, a] : groups) {
        for (double& v : a.x) v /= static_cast<double>(a.count);
        ss << key[0] << ',' << key[1] << ',' << key[2] << ',' << key[3] << ',' << a.count;
        for (double v : a.x) ss << ',' << io::fmt(v);
        ss << ',' << io::fmt(quantile(a.gaps, 0.5)) << ',' << io::fmt(quantile(a.secs, 0.5)) << '\n';
        per_predictor[key[0] + (key[1] == "0" ? "" : "_" + key[1])].push_back({key[2] + " " + key[3], a.x});
    }
    io::write_text_file((fs::path(out_dir) / "schedule_summary.csv").string(), ss.str());
    for (const auto& [label, series] : per_predictor)
        io::write_text_file((fs::path(out_dir) / ("schedule_" + safe(label) + ".svg")).string(),
                            line_svg("Mean schedule, predictor " + label, series, "appointment", "minutes"));

    // OOS 95th percentile spread per group and perturbation
    const std::size_t op = oos.col("predictor"), os = oos.col("sweep"), om = oos.col("method"), oo = oos.col("objective"),
                      opt = oos.col("perturbation"), o95 = oos.col("p95"), omean = oos.col("mean");
    std::map<std::vector<std::string>, std::pair<std::vector<double>, std::vector<double>>> og;
    for (const auto& row : oos.rows) {
        auto& g = og[{row[op], row[os], row[om], row[oo], row[opt]}];
        g.first.push_back(num(row[o95]));
        g.second.push_back(num(row[omean]));
    }
    std::ostringstream ot;
    ot << "predictor,sweep,method,objective,perturbation,count,p95_q1,p95_median,p95_q3,mean_median\n";
    std::ostringstream md;
    md << "| predictor | sweep | method | objective | perturbation | n | p95 median | p95 IQR | mean cost median |\n";
    md << "|---|---|---|---|---|---|---|---|---|\n";
    std::map<std::string, std::vector<BoxStat>> boxes;
    for (const auto& [key, g] : og) {
        const double q1 = quantile(g.first, 0.25), q2 = quantile(g.first, 0.5), q3 = quantile(g.first, 0.75);
        const double mm = quantile(g.second, 0.5);
        ot << key[0] << ',' << key[1] << ',' << key[2] << ',' << key[3] << ',' << key[4] << ',' << g.first.size() << ','
           << io::fmt(q1) << ',' << io::fmt(q2) << ',' << io::fmt(q3) << ',' << io::fmt(mm) << '\n';
        char buf[256];
        std::snprintf(buf, sizeof buf, "| %s | %s | %s | %s | %s | %zu | %.1f | %.1f-%.1f | %.1f |\n", key[0].c_str(),
                      key[1].c_str(), key[2].c_str(), key[3].c_str(), key[4].c_str(), g.first.size(), q2, q1, q3, mm);
        md << buf;
        const auto [mn, mx] = std::minmax_element(g.first.begin(), g.first.end());
        boxes[key[4]].push_back({key[0] + (key[1] == "0" ? "" : "@" + key[1]) + " " + key[2] + "/" + key[3], *mn, q1, q2, q3, *mx});
    }
    io::write_text_file((fs::path(out_dir) / "oos_table.csv").string(), ot.str());
    io::write_text_file((fs::path(out_dir) / "summary.md").string(),
                        "# Out-of-sample 95th percentile of total cost\n\n" + md.str());
    for (const auto& [pert, b] : boxes)
        io::write_text_file((fs::path(out_dir) / ("oos_p95_" + safe(pert) + ".svg")).string(),
                            box_svg("Out-of-sample 95th percentile (" + pert + ")", b));
}

}  // namespace cqm::report
