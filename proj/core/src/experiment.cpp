#include "qsync/experiment.hpp"

#include "qsync/block_io.hpp"
#include "qsync/camera_io.hpp"
#include "qsync/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <istream>
#include <ostream>
#include <sstream>

namespace qsync {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || !std::isfinite(d))
    throw Error(ErrorCode::parse, "config key '" + key + "': expected a number, got '" + v + "'");
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long d = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0') throw Error(ErrorCode::parse, "config key '" + key + "': expected an integer, got '" + v + "'");
  return d;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::parse, "config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split(v, ',')) out.push_back(to_double(key, s));
  return out;
}

std::vector<int> to_ints(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& s : split(v, ',')) out.push_back(static_cast<int>(to_int(key, s)));
  return out;
}

// "0,3,5-9" style lists
std::vector<std::uint64_t> to_seeds(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const auto& s : split(v, ',')) {
    const auto dash = s.find('-', 1);
    if (dash == std::string::npos) {
      const long long x = to_int(key, s);
      if (x < 0) throw Error(ErrorCode::parse, "config key '" + key + "': negative seed");
      out.push_back(static_cast<std::uint64_t>(x));
      continue;
    }
    const long long a = to_int(key, trim(s.substr(0, dash))), b = to_int(key, trim(s.substr(dash + 1)));
    if (a < 0 || b < a) throw Error(ErrorCode::parse, "config key '" + key + "': bad seed range '" + s + "'");
    for (long long x = a; x <= b; ++x) out.push_back(static_cast<std::uint64_t>(x));
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>)
      s += fmt(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed * 0x9e3779b97f4a7c15ULL + salt;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void strip_times(RunOutput& r) {
  r.row.time_s = 0;
  r.row.c_update_s = 0;
  r.diagnostics.c_update_s = 0;
  r.diagnostics.total_s = 0;
  for (auto& it : r.diagnostics.iterations) it.wall_s = 0;
}

// Runs the tasks `jobs` at a time and concatenates their outputs in task order.
std::vector<RunOutput> run_tasks(const ExperimentConfig& c, std::vector<std::function<std::vector<RunOutput>()>> tasks) {
  std::vector<std::vector<RunOutput>> parts(tasks.size());
  const std::size_t jobs = static_cast<std::size_t>(std::max(1, c.jobs));
  for (std::size_t b = 0; b < tasks.size(); b += jobs) {
    const std::size_t e = std::min(tasks.size(), b + jobs);
    if (e - b == 1) {
      parts[b] = tasks[b]();
      continue;
    }
    std::vector<std::future<std::vector<RunOutput>>> fut;
    for (std::size_t k = b; k < e; ++k) fut.push_back(std::async(std::launch::async, tasks[k]));
    for (std::size_t k = b; k < e; ++k) parts[k] = fut[k - b].get();
  }
  std::vector<RunOutput> out;
  for (auto& p : parts)
    for (auto& r : p) {
      if (!c.record_time) strip_times(r);
      out.push_back(std::move(r));
    }
  return out;
}

RunOutput evaluated(const std::string& tag, const std::string& scenario, int n, double noise, double observed,
                    std::uint64_t seed, const CameraStack& est, const CameraStack& gt, double time_s) {
  RunOutput r;
  r.tag = tag;
  const ProjectiveAlignment a = fit_frame_to_ground_truth(est, gt);
  r.cameras = apply_alignment(est, a);
  r.row = make_row(scenario, n, noise, observed, seed, pose_errors(r.cameras, gt), time_s);
  return r;
}

}  // namespace

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::collinear: return "collinear";
    case Scenario::generic: return "generic";
    case Scenario::distributed: return "distributed";
    case Scenario::subsample_sweep: return "subsample-sweep";
    case Scenario::joint: return "joint";
  }
  return "?";
}

Scenario parse_scenario(const std::string& s) {
  for (Scenario v : {Scenario::collinear, Scenario::generic, Scenario::distributed, Scenario::subsample_sweep, Scenario::joint})
    if (s == to_string(v)) return v;
  throw Error(ErrorCode::parse, "unknown scenario '" + s + "'");
}

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::invalid_argument, m); };
  if (n < 4) bad("n: need at least 4 cameras");
  if (seeds.empty()) bad("seeds: list is empty");
  if (noise_pct.empty()) bad("noise_pct: list is empty");
  if (observed_pct.empty()) bad("observed_pct: list is empty");
  for (double v : noise_pct)
    if (v < 0) bad("noise_pct: must be non-negative");
  for (double v : observed_pct)
    if (!(v > 0 && v <= 100)) bad("observed_pct: must lie in (0, 100]");
  if (scene.distance <= 0 || scene.extent < 0) bad("distance/extent: must be positive");
  if (quad.rho <= 0) bad("rho: must be positive");
  if (joint.rho <= 0) bad("joint_rho: must be positive");
  if (quad.irls_iters < 1 || quad.admm_iters < 1 || quad.alt_iters < 1) bad("irls_iters/admm_iters/alt_iters: must be >= 1");
  if (joint.irls_iters < 1 || joint.admm_iters < 1 || joint.alt_iters < 1)
    bad("joint_irls_iters/joint_admm_iters/joint_alt_iters: must be >= 1");
  if (quad.subsample_m < 0) bad("subsample_m: must be non-negative");
  if (scenario == Scenario::subsample_sweep) {
    if (sweep_m.empty()) bad("sweep_m: list is empty");
    for (int m : sweep_m)
      if (m < 0) bad("sweep_m: must be non-negative");
  }
  if (jobs < 1) bad("jobs: must be >= 1");
  if (scenario == Scenario::distributed && cluster_file.empty()) {
    if (cluster_sizes.empty()) bad("clusters: list is empty");
    if (cluster_overlap < 2) bad("cluster_overlap: must be >= 2");
  }
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (key == "scenario") c.scenario = parse_scenario(v);
  else if (key == "layout") {
    if (v == "collinear") c.layout = CameraLayout::collinear;
    else if (v == "generic") c.layout = CameraLayout::generic;
    else throw Error(ErrorCode::parse, "config key 'layout': expected collinear or generic, got '" + v + "'");
  }
  else if (key == "n") c.n = static_cast<int>(to_int(key, v));
  else if (key == "noise_pct") c.noise_pct = to_doubles(key, v);
  else if (key == "observed_pct") c.observed_pct = to_doubles(key, v);
  else if (key == "seeds") c.seeds = to_seeds(key, v);
  else if (key == "distance") c.scene.distance = to_double(key, v);
  else if (key == "extent") c.scene.extent = to_double(key, v);
  else if (key == "spacing_jitter") c.scene.spacing_jitter = to_double(key, v);
  else if (key == "max_perturb_deg") c.scene.max_perturb_deg = to_double(key, v);
  else if (key == "rho") c.quad.rho = to_double(key, v);
  else if (key == "irls_iters") c.quad.irls_iters = static_cast<int>(to_int(key, v));
  else if (key == "admm_iters") c.quad.admm_iters = static_cast<int>(to_int(key, v));
  else if (key == "alt_iters") c.quad.alt_iters = static_cast<int>(to_int(key, v));
  else if (key == "delta") c.quad.delta = to_double(key, v);
  else if (key == "sqrt_weights") c.quad.sqrt_weights = to_bool(key, v);
  else if (key == "subsample_m") c.quad.subsample_m = static_cast<int>(to_int(key, v));
  else if (key == "solver_seed") c.quad.seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "early_stop") c.quad.early_stop = c.joint.early_stop = to_bool(key, v);
  else if (key == "early_stop_tol") c.quad.early_stop_tol = c.joint.early_stop_tol = to_double(key, v);
  else if (key == "divergence_guard") c.quad.divergence_guard = c.joint.divergence_guard = to_bool(key, v);
  else if (key == "joint_rho") c.joint.rho = to_double(key, v);
  else if (key == "joint_irls_iters") c.joint.irls_iters = static_cast<int>(to_int(key, v));
  else if (key == "joint_admm_iters") c.joint.admm_iters = static_cast<int>(to_int(key, v));
  else if (key == "joint_alt_iters") c.joint.alt_iters = static_cast<int>(to_int(key, v));
  else if (key == "joint_delta") c.joint.delta = to_double(key, v);
  else if (key == "sweep_m") c.sweep_m = to_ints(key, v);
  else if (key == "clusters") c.cluster_sizes = to_ints(key, v);
  else if (key == "cluster_overlap") c.cluster_overlap = static_cast<int>(to_int(key, v));
  else if (key == "cluster_file") c.cluster_file = v;
  else if (key == "compare_full") c.compare_full = to_bool(key, v);
  else if (key == "jobs") c.jobs = static_cast<int>(to_int(key, v));
  else if (key == "record_time") c.record_time = to_bool(key, v);
  else if (key == "out_dir") c.out_dir = v;
  else throw Error(ErrorCode::parse, "unknown config key '" + key + "'");
}

ExperimentConfig read_config(std::istream& is) {
  ExperimentConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::parse, "config line " + std::to_string(lineno) + ": expected key = value");
    try {
      apply_setting(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(e.code(), "config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::io, "cannot open config " + path);
  return read_config(f);
}

void write_config(std::ostream& os, const ExperimentConfig& c) {
  os << "scenario = " << to_string(c.scenario) << '\n'
     << "layout = " << (c.layout == CameraLayout::collinear ? "collinear" : "generic") << '\n'
     << "n = " << c.n << '\n'
     << "noise_pct = " << join(c.noise_pct) << '\n'
     << "observed_pct = " << join(c.observed_pct) << '\n'
     << "seeds = " << join(c.seeds) << '\n'
     << "distance = " << fmt(c.scene.distance) << '\n'
     << "extent = " << fmt(c.scene.extent) << '\n'
     << "spacing_jitter = " << fmt(c.scene.spacing_jitter) << '\n'
     << "max_perturb_deg = " << fmt(c.scene.max_perturb_deg) << '\n'
     << "rho = " << fmt(c.quad.rho) << '\n'
     << "irls_iters = " << c.quad.irls_iters << '\n'
     << "admm_iters = " << c.quad.admm_iters << '\n'
     << "alt_iters = " << c.quad.alt_iters << '\n'
     << "delta = " << fmt(c.quad.delta) << '\n'
     << "sqrt_weights = " << (c.quad.sqrt_weights ? "true" : "false") << '\n'
     << "subsample_m = " << c.quad.subsample_m << '\n'
     << "solver_seed = " << c.quad.seed << '\n'
     << "early_stop = " << (c.quad.early_stop ? "true" : "false") << '\n'
     << "early_stop_tol = " << fmt(c.quad.early_stop_tol) << '\n'
     << "divergence_guard = " << (c.quad.divergence_guard ? "true" : "false") << '\n'
     << "joint_rho = " << fmt(c.joint.rho) << '\n'
     << "joint_irls_iters = " << c.joint.irls_iters << '\n'
     << "joint_admm_iters = " << c.joint.admm_iters << '\n'
     << "joint_alt_iters = " << c.joint.alt_iters << '\n'
     << "joint_delta = " << fmt(c.joint.delta) << '\n'
     << "sweep_m = " << join(c.sweep_m) << '\n'
     << "clusters = " << join(c.cluster_sizes) << '\n'
     << "cluster_overlap = " << c.cluster_overlap << '\n';
  if (!c.cluster_file.empty()) os << "cluster_file = " << c.cluster_file << '\n';
  os << "compare_full = " << (c.compare_full ? "true" : "false") << '\n'
     << "jobs = " << c.jobs << '\n'
     << "record_time = " << (c.record_time ? "true" : "false") << '\n'
     << "out_dir = " << c.out_dir << '\n';
}

namespace {

const char* const kColumns[] = {"scenario", "n",      "noise", "observed", "mean_et",     "med_et",
                                "mean_er",  "med_er", "time_s", "seed",    "subsample_m", "c_update_s"};

}  // namespace

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  for (std::size_t k = 0; k < 12; ++k) os << (k ? "," : "") << kColumns[k];
  os << '\n';
  for (const auto& r : rows) {
    std::string s = r.scenario;
    std::replace(s.begin(), s.end(), ',', ';');
    os << s << ',' << r.n << ',' << fmt(r.noise) << ',' << fmt(r.observed) << ',' << fmt(r.mean_et) << ','
       << fmt(r.med_et) << ',' << fmt(r.mean_er) << ',' << fmt(r.med_er) << ',' << fmt(r.time_s) << ',' << r.seed
       << ',' << r.subsample_m << ',' << fmt(r.c_update_s) << '\n';
  }
}

std::vector<ResultRow> read_results_csv(std::istream& is) {
  std::vector<ResultRow> rows;
  std::string line;
  int lineno = 0;
  bool header = false;
  auto fail = [&](const std::string& m) { throw Error(ErrorCode::parse, "results line " + std::to_string(lineno) + ": " + m); };
  auto num = [&](const std::string& s, const char* col) {
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') fail(std::string("bad value '") + s + "' in column " + col);
    return d;
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (!header) {
      if (f.size() < 10) fail("header needs at least 10 columns");
      for (std::size_t k = 0; k < f.size() && k < 12; ++k)
        if (f[k] != kColumns[k]) fail("expected column '" + std::string(kColumns[k]) + "', got '" + f[k] + "'");
      header = true;
      continue;
    }
    if (f.size() != 10 && f.size() != 12) fail("expected 10 or 12 fields, got " + std::to_string(f.size()));
    ResultRow r;
    r.scenario = f[0];
    const double n = num(f[1], "n");
    if (n != std::floor(n) || n < 0) fail("n must be a non-negative integer");
    r.n = static_cast<int>(n);
    r.noise = num(f[2], "noise");
    r.observed = num(f[3], "observed");
    r.mean_et = num(f[4], "mean_et");
    r.med_et = num(f[5], "med_et");
    r.mean_er = num(f[6], "mean_er");
    r.med_er = num(f[7], "med_er");
    r.time_s = num(f[8], "time_s");
    const double seed = num(f[9], "seed");
    if (seed < 0 || seed != std::floor(seed)) fail("seed must be a non-negative integer");
    r.seed = static_cast<std::uint64_t>(seed);
    if (f.size() == 12) {
      r.subsample_m = static_cast<int>(num(f[10], "subsample_m"));
      r.c_update_s = num(f[11], "c_update_s");
    }
    rows.push_back(std::move(r));
  }
  if (!header) throw Error(ErrorCode::parse, "results file is empty");
  return rows;
}

std::vector<ResultRow> load_results_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::io, "cannot open results " + path);
  try {
    return read_results_csv(f);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

CameraLayout effective_layout(const ExperimentConfig& c) {
  if (c.scenario == Scenario::collinear) return CameraLayout::collinear;
  if (c.scenario == Scenario::generic) return CameraLayout::generic;
  return c.layout;
}

SynthData synthesize(const ExperimentConfig& c, double noise, double observed, std::uint64_t seed) {
  SynthData d;
  d.gt = generate_cameras(c.n, effective_layout(c), seed, c.scene);
  const std::vector<Quad> quads = sample_quadruples(c.n, observed, mix(seed, 1));
  d.quad = build_noisy_block_tensor4(d.gt, quads, noise, mix(seed, 2), true);
  if (c.scenario == Scenario::joint) {
    const Observation full = full_observation(c.n);
    d.tri = build_noisy_block_tensor3(d.gt, full.triples, noise, mix(seed, 3), true);
    d.ess = build_noisy_block_matrix(d.gt, full.pairs, noise, mix(seed, 4), true);
  } else {
    d.tri = BlockTensor3(c.n);
    d.ess = BlockMatrix(c.n);
  }
  return d;
}

ResultRow make_row(const std::string& scenario, int n, double noise, double observed, std::uint64_t seed,
                   const PoseErrors& e, double time_s) {
  ResultRow r;
  r.scenario = scenario;
  r.n = n;
  r.noise = noise;
  r.observed = observed;
  r.mean_et = e.mean_location;
  r.med_et = e.median_location;
  r.mean_er = e.mean_rotation;
  r.med_er = e.median_rotation;
  r.time_s = time_s;
  r.seed = seed;
  return r;
}

std::string run_tag(double noise, double observed, std::uint64_t seed) {
  return "obs" + fmt(observed) + "_noise" + fmt(noise) + "_seed" + std::to_string(seed);
}

std::vector<RunOutput> run_sync_experiment(const ExperimentConfig& c) {
  c.validate();
  std::vector<std::function<std::vector<RunOutput>()>> tasks;
  for (double obs : c.observed_pct)
    for (double noise : c.noise_pct)
      for (std::uint64_t seed : c.seeds)
        tasks.emplace_back([&c, obs, noise, seed] {
          const SynthData d = synthesize(c, noise, obs, seed);
          const auto t0 = Clock::now();
          SyncResult res = run_quadsync(d.quad, c.quad);
          const double t = seconds_since(t0);
          RunOutput r = evaluated(run_tag(noise, obs, seed), to_string(c.scenario), c.n, noise, obs, seed, res.cameras, d.gt, t);
          r.row.subsample_m = c.quad.subsample_m;
          r.row.c_update_s = res.diagnostics.c_update_s;
          r.diagnostics = std::move(res.diagnostics);
          return std::vector<RunOutput>{std::move(r)};
        });
  return run_tasks(c, std::move(tasks));
}

std::vector<RunOutput> run_joint_experiment(const ExperimentConfig& c) {
  c.validate();
  std::vector<std::function<std::vector<RunOutput>()>> tasks;
  for (double obs : c.observed_pct)
    for (double noise : c.noise_pct)
      for (std::uint64_t seed : c.seeds)
        tasks.emplace_back([&c, obs, noise, seed] {
          const SynthData d = synthesize(c, noise, obs, seed);
          const auto t0 = Clock::now();
          SyncResult res = run_joint(d.quad, d.tri, d.ess, c.joint);
          const double t = seconds_since(t0);
          RunOutput r = evaluated(run_tag(noise, obs, seed), "joint", c.n, noise, obs, seed, res.cameras, d.gt, t);
          r.row.c_update_s = res.diagnostics.c_update_s;
          r.diagnostics = std::move(res.diagnostics);
          return std::vector<RunOutput>{std::move(r)};
        });
  return run_tasks(c, std::move(tasks));
}

ClusterPlan plan_for(const ExperimentConfig& c) {
  if (!c.cluster_file.empty()) {
    ClusterPlan p = load_cluster_plan(c.cluster_file);
    p.validate(c.n);
    return p;
  }
  return chain_plan(c.n, c.cluster_sizes, c.cluster_overlap);
}

std::vector<RunOutput> run_distributed_experiment(const ExperimentConfig& c) {
  c.validate();
  const ClusterPlan plan = plan_for(c);
  std::vector<std::function<std::vector<RunOutput>()>> tasks;
  for (double obs : c.observed_pct)
    for (double noise : c.noise_pct)
      for (std::uint64_t seed : c.seeds)
        tasks.emplace_back([&c, &plan, obs, noise, seed] {
          const SynthData d = synthesize(c, noise, obs, seed);
          const std::string base = run_tag(noise, obs, seed);
          std::vector<RunOutput> out;
          DistributedResult dr = run_distributed(d.quad, plan, c.quad);
          for (std::size_t k = 0; k < dr.clusters.size(); ++k) {
            ClusterRun& run = dr.clusters[k];
            const std::string label = "cluster" + std::to_string(k + 1);
            RunOutput r = evaluated(base + "_" + label, "distributed/" + label, static_cast<int>(run.cameras.size()), noise,
                                    obs, seed, run.result.cameras, d.gt.subset(run.cameras), run.wall_s);
            r.row.c_update_s = run.result.diagnostics.c_update_s;
            r.diagnostics = std::move(run.result.diagnostics);
            out.push_back(std::move(r));
          }
          out.push_back(evaluated(base + "_aligned", "distributed/aligned", c.n, noise, obs, seed, dr.cameras, d.gt, dr.wall_s));
          if (c.compare_full) {
            const auto t0 = Clock::now();
            SyncResult full = run_quadsync(d.quad, c.quad);
            const double t = seconds_since(t0);
            RunOutput r = evaluated(base + "_full", "distributed/full", c.n, noise, obs, seed, full.cameras, d.gt, t);
            r.row.c_update_s = full.diagnostics.c_update_s;
            r.diagnostics = std::move(full.diagnostics);
            out.push_back(std::move(r));
          }
          return out;
        });
  return run_tasks(c, std::move(tasks));
}

std::vector<RunOutput> run_subsample_sweep(const ExperimentConfig& c) {
  c.validate();
  std::vector<std::function<std::vector<RunOutput>()>> tasks;
  for (double obs : c.observed_pct)
    for (double noise : c.noise_pct)
      for (std::uint64_t seed : c.seeds)
        tasks.emplace_back([&c, obs, noise, seed] {
          const SynthData d = synthesize(c, noise, obs, seed);
          std::vector<RunOutput> out;
          for (int m : c.sweep_m) {
            QuadSyncConfig qc = c.quad;
            qc.subsample_m = m;
            const auto t0 = Clock::now();
            SyncResult res = run_quadsync(d.quad, qc);
            const double t = seconds_since(t0);
            RunOutput r = evaluated(run_tag(noise, obs, seed) + "_m" + std::to_string(m), "subsample-sweep", c.n, noise, obs,
                                    seed, res.cameras, d.gt, t);
            r.row.subsample_m = m;
            r.row.c_update_s = res.diagnostics.c_update_s;
            r.diagnostics = std::move(res.diagnostics);
            out.push_back(std::move(r));
          }
          return out;
        });
  return run_tasks(c, std::move(tasks));
}

std::vector<RunOutput> run_experiment(const ExperimentConfig& c) {
  switch (c.scenario) {
    case Scenario::collinear:
    case Scenario::generic: return run_sync_experiment(c);
    case Scenario::joint: return run_joint_experiment(c);
    case Scenario::distributed: return run_distributed_experiment(c);
    case Scenario::subsample_sweep: return run_subsample_sweep(c);
  }
  return {};
}

void write_run_outputs(const std::string& dir, const std::vector<RunOutput>& runs) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + dir + ": " + ec.message());
  const std::filesystem::path root(dir);
  auto open = [](const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw Error(ErrorCode::io, "cannot write " + p.string());
    return f;
  };
  std::vector<ResultRow> rows;
  for (const auto& r : runs) {
    rows.push_back(r.row);
    {
      std::ofstream f = open(root / ("diag_" + r.tag + ".csv"));
      write_diagnostics_csv(f, r.diagnostics);
    }
    std::ofstream f = open(root / ("cameras_" + r.tag + ".txt"));
    write_cameras(f, r.cameras);
  }
  std::ofstream f = open(root / "results.csv");
  write_results_csv(f, rows);
  if (!f) throw Error(ErrorCode::io, "write failed for " + (root / "results.csv").string());
}

std::vector<std::string> write_synth_files(const ExperimentConfig& c, const std::string& dir) {
  c.validate();
  std::vector<std::string> tags;
  for (double obs : c.observed_pct)
    for (double noise : c.noise_pct)
      for (std::uint64_t seed : c.seeds) {
        const SynthData d = synthesize(c, noise, obs, seed);
        const std::string tag = run_tag(noise, obs, seed);
        const std::filesystem::path sub = std::filesystem::path(dir) / tag;
        std::error_code ec;
        std::filesystem::create_directories(sub, ec);
        if (ec) throw Error(ErrorCode::io, "cannot create " + sub.string() + ": " + ec.message());
        save_cameras((sub / "cameras_gt.txt").string(), d.gt);
        save_blocks((sub / "quad.blocks").string(), AnyBlocks{d.quad});
        if (c.scenario == Scenario::joint) {
          save_blocks((sub / "tri.blocks").string(), AnyBlocks{d.tri});
          save_blocks((sub / "ess.blocks").string(), AnyBlocks{d.ess});
        }
        tags.push_back(tag);
      }
  std::ofstream f(std::filesystem::path(dir) / "config.cfg");
  if (!f) throw Error(ErrorCode::io, "cannot write config copy under " + dir);
  write_config(f, c);
  return tags;
}

}  // namespace qsync
