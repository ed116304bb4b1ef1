#pragma once

// Synthetic experiment orchestration: configuration, data generation,
// solver runs against ground truth and result rows.
//
// Config files are flat `key = value` lines; `#` starts a comment. List
// values are comma separated.

#include "qsync/block_tensor.hpp"
#include "qsync/distributed.hpp"
#include "qsync/geometry.hpp"
#include "qsync/joint.hpp"
#include "qsync/quadsync.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qsync {

enum class Scenario { collinear, generic, distributed, subsample_sweep, joint };

const char* to_string(Scenario s);
Scenario parse_scenario(const std::string& s);

struct ExperimentConfig {
  Scenario scenario = Scenario::collinear;
  // camera layout for the distributed, subsample-sweep and joint scenarios
  CameraLayout layout = CameraLayout::collinear;
  int n = 10;
  std::vector<double> noise_pct{0.0};
  std::vector<double> observed_pct{100.0};
  std::vector<std::uint64_t> seeds{0};
  SceneOptions scene;
  QuadSyncConfig quad;
  JointConfig joint;
  // subsample-sweep: column counts, 0 = full updates
  std::vector<int> sweep_m{0, 30};
  // distributed: chain plan, ignored when cluster_file is set
  std::vector<int> cluster_sizes{10, 15, 15};
  int cluster_overlap = 5;
  std::string cluster_file;
  bool compare_full = true;  // distributed: also run the full tensor
  int jobs = 1;              // seeds solved concurrently
  bool record_time = true;   // false writes 0 times, for byte-stable output
  std::string out_dir = ".";

  // Throws invalid_argument naming the offending field.
  void validate() const;
};

ExperimentConfig read_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);
void write_config(std::ostream& os, const ExperimentConfig& c);
// Applies one `key = value` setting; throws parse on unknown keys.
void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value);

struct ResultRow {
  std::string scenario;
  int n = 0;
  double noise = 0;
  double observed = 100;
  double mean_et = 0, med_et = 0;  // location
  double mean_er = 0, med_er = 0;  // rotation, degrees
  double time_s = 0;
  std::uint64_t seed = 0;
  int subsample_m = 0;
  double c_update_s = 0;
};

// Column order: scenario, n, noise, observed, mean_et, med_et, mean_er,
// med_er, time_s, seed, subsample_m, c_update_s.
void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);
// Accepts the first ten columns alone. Errors carry the line number.
std::vector<ResultRow> read_results_csv(std::istream& is);
std::vector<ResultRow> load_results_csv(const std::string& path);

struct SynthData {
  CameraStack gt;
  BlockTensor4 quad;
  BlockTensor3 tri;  // joint scenario only
  BlockMatrix ess;   // joint scenario only
};

CameraLayout effective_layout(const ExperimentConfig& c);
// One data set: cameras from `seed`, uniform quadruple sample at `observed`
// percent, per-block camera noise at `noise` percent.
SynthData synthesize(const ExperimentConfig& c, double noise, double observed, std::uint64_t seed);

ResultRow make_row(const std::string& scenario, int n, double noise, double observed, std::uint64_t seed,
                   const PoseErrors& e, double time_s);

struct RunOutput {
  std::string tag;  // file stem for per-run artifacts
  ResultRow row;
  CameraStack cameras;  // aligned to ground truth
  SolverDiagnostics diagnostics;
};

// Every (observed, noise, seed) combination of the config, in that nesting
// order; seeds run `jobs` at a time.
std::vector<RunOutput> run_sync_experiment(const ExperimentConfig& c);
std::vector<RunOutput> run_joint_experiment(const ExperimentConfig& c);
// Per seed: a row per cluster, the merged row, and the full-tensor row.
std::vector<RunOutput> run_distributed_experiment(const ExperimentConfig& c);
// Per seed and m: one row with the C-update time.
std::vector<RunOutput> run_subsample_sweep(const ExperimentConfig& c);
// Dispatches on the scenario.
std::vector<RunOutput> run_experiment(const ExperimentConfig& c);

ClusterPlan plan_for(const ExperimentConfig& c);

// Writes results.csv, diag_<tag>.csv and cameras_<tag>.txt under dir.
void write_run_outputs(const std::string& dir, const std::vector<RunOutput>& runs);

// Data files for every combination: <dir>/<tag>/{cameras_gt.txt, quad.blocks,
// tri.blocks, ess.blocks}; returns the tags.
std::vector<std::string> write_synth_files(const ExperimentConfig& c, const std::string& dir);

std::string run_tag(double noise, double observed, std::uint64_t seed);

}  // namespace qsync
