#pragma once

#include <string>

namespace cqm::report {

/// Reads schedules.csv and oos_summary.csv from in_dir; writes
/// schedule_summary.csv, oos_table.csv, summary.md and SVG plots to out_dir.
void build_report(const std::string& in_dir, const std::string& out_dir);

}  // namespace cqm::report
