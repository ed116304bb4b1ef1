#pragma once

// Summaries of result rows: seed-averaged text table and SVG line charts.

#include "qsync/experiment.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace qsync {

// Rows sharing scenario, n, noise, observed and subsample_m, averaged over
// seeds; `seeds` holds the group size. Sorted by those keys.
struct SummaryRow {
  ResultRow mean;
  int seeds = 0;
};

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);
void write_summary_table(std::ostream& os, const std::vector<SummaryRow>& s);

struct Series {
  std::string name;
  std::vector<double> x, y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
};

// Deterministic SVG; a series of one point is drawn as a marker, an empty
// chart as axes only.
std::string svg_line_chart(const ChartSpec& spec, const std::vector<Series>& series);

// Charts derived from summaries: location and rotation error against noise
// (one series per scenario and observed fraction), against observed fraction
// (per scenario and noise), and C-update time against subsample size.
std::vector<Series> error_vs_noise(const std::vector<SummaryRow>& s, bool rotation);
std::vector<Series> error_vs_observed(const std::vector<SummaryRow>& s, bool rotation);
std::vector<Series> runtime_vs_m(const std::vector<SummaryRow>& s);

// table.txt plus the five charts under dir; returns the written file names.
std::vector<std::string> write_report(const std::string& dir, const std::vector<ResultRow>& rows);

}  // namespace qsync
