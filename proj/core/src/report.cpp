#include "qsync/report.hpp"

#include "qsync/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <tuple>

namespace qsync {

namespace {

using Key = std::tuple<std::string, int, double, double, int>;

Key key_of(const ResultRow& r) { return {r.scenario, r.n, r.noise, r.observed, r.subsample_m}; }

std::string num(double v, const char* f = "%.6g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '&') o += "&amp;";
    else if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '"') o += "&quot;";
    else o += c;
  }
  return o;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

// Round-number ticks covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  std::vector<double> t;
  for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + step * 1e-9; v += step) t.push_back(std::abs(v) < step * 1e-9 ? 0.0 : v);
  return t;
}

void range_of(const std::vector<Series>& s, bool y, bool log, double& lo, double& hi) {
  lo = INFINITY;
  hi = -INFINITY;
  for (const auto& ser : s)
    for (double v : (y ? ser.y : ser.x)) {
      if (!std::isfinite(v) || (log && v <= 0)) continue;
      const double w = log ? std::log10(v) : v;
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
  if (!std::isfinite(lo)) {
    lo = 0;
    hi = 1;
  }
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    const double pad = std::max(std::abs(hi) * 0.1, log ? 0.5 : 1e-3);
    lo -= pad;
    hi += pad;
  }
  if (!log && lo > 0 && lo < 0.25 * hi) lo = 0;
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::map<Key, SummaryRow> groups;
  for (const auto& r : rows) {
    SummaryRow& g = groups[key_of(r)];
    if (g.seeds == 0) {
      g.mean = r;
      g.mean.seed = 0;
    } else {
      g.mean.mean_et += r.mean_et;
      g.mean.med_et += r.med_et;
      g.mean.mean_er += r.mean_er;
      g.mean.med_er += r.med_er;
      g.mean.time_s += r.time_s;
      g.mean.c_update_s += r.c_update_s;
    }
    ++g.seeds;
  }
  std::vector<SummaryRow> out;
  for (auto& [k, g] : groups) {
    const double s = g.seeds;
    g.mean.mean_et /= s;
    g.mean.med_et /= s;
    g.mean.mean_er /= s;
    g.mean.med_er /= s;
    g.mean.time_s /= s;
    g.mean.c_update_s /= s;
    out.push_back(g);
  }
  return out;
}

void write_summary_table(std::ostream& os, const std::vector<SummaryRow>& s) {
  const std::vector<std::string> head{"scenario", "n",      "noise",  "observed", "mean_et",    "med_et", "mean_er",
                                      "med_er",   "time_s", "seeds",  "m",        "c_update_s"};
  std::vector<std::vector<std::string>> cells{head};
  for (const auto& g : s) {
    const ResultRow& r = g.mean;
    cells.push_back({r.scenario, std::to_string(r.n), num(r.noise), num(r.observed), num(r.mean_et, "%.4g"),
                     num(r.med_et, "%.4g"), num(r.mean_er, "%.4g"), num(r.med_er, "%.4g"), num(r.time_s, "%.3f"),
                     std::to_string(g.seeds), r.subsample_m ? std::to_string(r.subsample_m) : "full",
                     num(r.c_update_s, "%.3f")});
  }
  std::vector<std::size_t> w(head.size(), 0);
  for (const auto& row : cells)
    for (std::size_t k = 0; k < row.size(); ++k) w[k] = std::max(w[k], row[k].size());
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) line += "  ";
      // text left, numbers right
      const std::string pad(w[k] - row[k].size(), ' ');
      line += k == 0 ? row[k] + pad : pad + row[k];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    os << line << '\n';
  }
}

std::string svg_line_chart(const ChartSpec& spec, const std::vector<Series>& series) {
  const double W = 640, H = 420, L = 80, R = 170, T = 40, B = 60;
  const double pw = W - L - R, ph = H - T - B;
  double x0, x1, y0, y1;
  range_of(series, false, false, x0, x1);
  range_of(series, true, spec.log_y, y0, y1);
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) {
    const double v = spec.log_y ? std::log10(y) : y;
    return T + ph - (v - y0) / (y1 - y0) * ph;
  };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) + "\" viewBox=\"0 0 " + num(W) +
       " " + num(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(spec.title) + "</text>\n";
  s += "<rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : ticks(x0, x1)) {
    const double x = px(t);
    s += "<line x1=\"" + num(x) + "\" y1=\"" + num(T + ph) + "\" x2=\"" + num(x) + "\" y2=\"" + num(T + ph + 5) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(x) + "\" y=\"" + num(T + ph + 18) + "\" text-anchor=\"middle\">" + num(t, "%.4g") + "</text>\n";
  }
  for (double t : ticks(y0, y1)) {
    const double y = T + ph - (t - y0) / (y1 - y0) * ph;
    const std::string label = spec.log_y ? "1e" + num(t, "%.3g") : num(t, "%.4g");
    s += "<line x1=\"" + num(L - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(L + pw) + "\" y2=\"" + num(y) +
         "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + num(L - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + label + "</text>\n";
  }
  s += "<text x=\"" + num(L + pw / 2) + "\" y=\"" + num(H - 15) + "\" text-anchor=\"middle\">" + escape(spec.x_label) +
       "</text>\n";
  s += "<text x=\"18\" y=\"" + num(T + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " + num(T + ph / 2) +
       ")\">" + escape(spec.y_label) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& ser = series[k];
    const std::string col = kPalette[k % (sizeof kPalette / sizeof *kPalette)];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
      if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i]) || (spec.log_y && ser.y[i] <= 0)) continue;
      pts.emplace_back(px(ser.x[i]), py(ser.y[i]));
    }
    if (pts.size() > 1) {
      s += "<polyline fill=\"none\" stroke=\"" + col + "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) s += (i ? " " : "") + num(pts[i].first) + "," + num(pts[i].second);
      s += "\"/>\n";
    }
    for (const auto& [x, y] : pts)
      s += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"3\" fill=\"" + col + "\"/>\n";
    const double ly = T + 10 + 18 * static_cast<double>(k);
    s += "<line x1=\"" + num(L + pw + 12) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(L + pw + 32) + "\" y2=\"" + num(ly) +
         "\" stroke=\"" + col + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(L + pw + 38) + "\" y=\"" + num(ly + 4) + "\">" + escape(ser.name) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

namespace {

std::vector<Series> grouped(const std::vector<SummaryRow>& s, bool by_noise, bool rotation) {
  // series label -> (x, y) sorted by x
  std::map<std::string, std::map<double, double>> m;
  for (const auto& g : s) {
    const ResultRow& r = g.mean;
    if (r.subsample_m != 0) continue;
    const std::string name = by_noise ? r.scenario + " obs " + num(r.observed) + "%" : r.scenario + " noise " + num(r.noise) + "%";
    m[name][by_noise ? r.noise : r.observed] = rotation ? r.mean_er : r.mean_et;
  }
  std::vector<Series> out;
  for (const auto& [name, pts] : m) {
    Series ser{name, {}, {}};
    for (const auto& [x, y] : pts) {
      ser.x.push_back(x);
      ser.y.push_back(y);
    }
    out.push_back(std::move(ser));
  }
  return out;
}

}  // namespace

std::vector<Series> error_vs_noise(const std::vector<SummaryRow>& s, bool rotation) { return grouped(s, true, rotation); }

std::vector<Series> error_vs_observed(const std::vector<SummaryRow>& s, bool rotation) { return grouped(s, false, rotation); }

std::vector<Series> runtime_vs_m(const std::vector<SummaryRow>& s) {
  std::map<std::string, std::map<double, double>> sampled;
  std::map<std::string, double> full;
  for (const auto& g : s) {
    const ResultRow& r = g.mean;
    const std::string name = r.scenario + " n " + std::to_string(r.n) + " noise " + num(r.noise) + "%";
    if (r.subsample_m > 0)
      sampled[name][r.subsample_m] = r.c_update_s;
    else if (r.scenario == "subsample-sweep")
      full[name] = r.c_update_s;
  }
  std::vector<Series> out;
  for (const auto& [name, pts] : sampled) {
    Series ser{name, {}, {}};
    for (const auto& [x, y] : pts) {
      ser.x.push_back(x);
      ser.y.push_back(y);
    }
    // full updates as a flat reference over the sampled range
    if (const auto it = full.find(name); it != full.end())
      out.push_back({name + " full", {ser.x.front(), ser.x.back()}, {it->second, it->second}});
    out.push_back(std::move(ser));
  }
  return out;
}

std::vector<std::string> write_report(const std::string& dir, const std::vector<ResultRow>& rows) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + dir + ": " + ec.message());
  const std::filesystem::path root(dir);
  const std::vector<SummaryRow> s = summarize(rows);
  std::vector<std::string> names;
  auto save = [&](const std::string& name, const std::string& text) {
    std::ofstream f(root / name, std::ios::binary);
    if (!f) throw Error(ErrorCode::io, "cannot write " + (root / name).string());
    f << text;
    names.push_back(name);
  };
  {
    std::ofstream f(root / "table.txt");
    if (!f) throw Error(ErrorCode::io, "cannot write " + (root / "table.txt").string());
    write_summary_table(f, s);
    names.push_back("table.txt");
  }
  save("location_vs_noise.svg", svg_line_chart({"Location error vs noise", "noise (%)", "mean location error", false},
                                               error_vs_noise(s, false)));
  save("rotation_vs_noise.svg", svg_line_chart({"Rotation error vs noise", "noise (%)", "mean rotation error (deg)", false},
                                               error_vs_noise(s, true)));
  save("location_vs_observed.svg",
       svg_line_chart({"Location error vs observed fraction", "observed quadruples (%)", "mean location error", false},
                      error_vs_observed(s, false)));
  save("rotation_vs_observed.svg",
       svg_line_chart({"Rotation error vs observed fraction", "observed quadruples (%)", "mean rotation error (deg)", false},
                      error_vs_observed(s, true)));
  save("runtime_vs_m.svg", svg_line_chart({"C-update time vs subsample size", "columns per row m", "C-update time (s)", false},
                                          runtime_vs_m(s)));
  return names;
}

}  // namespace qsync
