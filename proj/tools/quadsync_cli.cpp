// quadsync: synthetic data generation, synchronization runs and reports.
//
// Every failure prints one line `error: <code>: <message>` to stderr and
// exits nonzero. QSYNC_NUM_THREADS overrides the worker count.

#include "qsync/block_io.hpp"
#include "qsync/camera_io.hpp"
#include "qsync/distributed.hpp"
#include "qsync/error.hpp"
#include "qsync/experiment.hpp"
#include "qsync/joint.hpp"
#include "qsync/quadsync.hpp"
#include "qsync/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace qsync;
namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
  std::optional<int> subsample_m;
  std::vector<std::string> inputs;
  std::string gt;
  std::string clusters;
};

void add_common(CLI::App* cmd, Common& o) {
  cmd->add_option("--config", o.config, "key = value experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "run this single seed instead of the config's list");
  cmd->add_option("--out", o.out, "output directory (default: out_dir from the config)");
  cmd->add_option("--set", o.overrides, "override a config key, key=value (repeatable)");
}

ExperimentConfig make_config(const Common& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::invalid_argument, "--set expects key=value, got '" + kv + "'");
    apply_setting(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) c.seeds = {*o.seed};
  if (o.subsample_m) c.quad.subsample_m = *o.subsample_m;
  if (!o.clusters.empty()) c.cluster_file = o.clusters;
  if (!o.out.empty()) c.out_dir = o.out;
  return c;
}

void print_summary(const std::vector<RunOutput>& runs) {
  std::vector<ResultRow> rows;
  for (const auto& r : runs) rows.push_back(r.row);
  write_summary_table(std::cout, summarize(rows));
}

void finish(const ExperimentConfig& c, const std::vector<RunOutput>& runs) {
  write_run_outputs(c.out_dir, runs);
  print_summary(runs);
  std::cout << "wrote " << (fs::path(c.out_dir) / "results.csv").string() << '\n';
}

// Solver output for file input: aligned to --gt when given.
void finish_single(const ExperimentConfig& c, const std::string& scenario, const CameraStack& est, SolverDiagnostics diag,
                   double time_s, const std::string& gt_path) {
  RunOutput r;
  r.tag = "input";
  r.diagnostics = std::move(diag);
  if (!gt_path.empty()) {
    const CameraStack gt = load_cameras(gt_path);
    if (gt.size() != est.size())
      throw Error(ErrorCode::dimension_mismatch, "ground truth has " + std::to_string(gt.size()) + " cameras, estimate " +
                                                     std::to_string(est.size()));
    r.cameras = apply_alignment(est, fit_frame_to_ground_truth(est, gt));
    r.row = make_row(scenario, est.size(), 0.0, 100.0, 0, pose_errors(r.cameras, gt), time_s);
    r.row.c_update_s = r.diagnostics.c_update_s;
    write_run_outputs(c.out_dir, {r});
    print_summary({r});
    return;
  }
  r.cameras = est;
  fs::create_directories(c.out_dir);
  save_cameras((fs::path(c.out_dir) / "cameras_input.txt").string(), est);
  std::ofstream f(fs::path(c.out_dir) / "diag_input.csv");
  if (!f) throw Error(ErrorCode::io, "cannot write diagnostics under " + c.out_dir);
  write_diagnostics_csv(f, r.diagnostics);
  std::cout << "wrote " << (fs::path(c.out_dir) / "cameras_input.txt").string() << " (projective frame)\n";
}

double seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_synth(const Common& o) {
  const ExperimentConfig c = make_config(o);
  const auto tags = write_synth_files(c, c.out_dir);
  for (const auto& t : tags) std::cout << (fs::path(c.out_dir) / t).string() << '\n';
  return 0;
}

int cmd_sync(const Common& o) {
  ExperimentConfig c = make_config(o);
  if (!o.inputs.empty()) {
    if (o.inputs.size() != 1) throw Error(ErrorCode::invalid_argument, "sync takes one --input block file");
    const BlockTensor4 q = load_block_tensor4(o.inputs[0]);
    const auto t0 = std::chrono::steady_clock::now();
    SyncResult res = run_quadsync(q, c.quad);
    finish_single(c, "input", res.cameras, std::move(res.diagnostics), seconds(t0), o.gt);
    return 0;
  }
  if (c.scenario != Scenario::collinear && c.scenario != Scenario::generic && c.scenario != Scenario::subsample_sweep)
    throw Error(ErrorCode::invalid_argument,
                std::string("scenario '") + to_string(c.scenario) + "' belongs to the " + to_string(c.scenario) + " subcommand");
  finish(c, run_experiment(c));
  return 0;
}

int cmd_joint(const Common& o) {
  ExperimentConfig c = make_config(o);
  if (!o.inputs.empty()) {
    std::optional<BlockTensor4> q;
    std::optional<BlockTensor3> t;
    std::optional<BlockMatrix> e;
    for (const auto& path : o.inputs) {
      AnyBlocks b = load_blocks(path);
      if (auto* x = std::get_if<BlockTensor4>(&b)) q = std::move(*x);
      else if (auto* y = std::get_if<BlockTensor3>(&b)) t = std::move(*y);
      else e = std::move(std::get<BlockMatrix>(b));
    }
    const int n = q ? q->n() : t ? t->n() : e->n();
    const auto t0 = std::chrono::steady_clock::now();
    SyncResult res = run_joint(q ? *q : BlockTensor4(n), t ? *t : BlockTensor3(n), e ? *e : BlockMatrix(n), c.joint);
    finish_single(c, "joint", res.cameras, std::move(res.diagnostics), seconds(t0), o.gt);
    return 0;
  }
  c.scenario = Scenario::joint;
  finish(c, run_experiment(c));
  return 0;
}

int cmd_distributed(const Common& o) {
  ExperimentConfig c = make_config(o);
  if (!o.inputs.empty()) {
    if (o.inputs.size() != 1) throw Error(ErrorCode::invalid_argument, "distributed takes one --input block file");
    if (c.cluster_file.empty()) throw Error(ErrorCode::invalid_argument, "--clusters is required with --input");
    const BlockTensor4 q = load_block_tensor4(o.inputs[0]);
    c.n = q.n();
    const DistributedResult dr = run_distributed(q, plan_for(c), c.quad);
    for (std::size_t k = 0; k < dr.clusters.size(); ++k)
      std::cout << "cluster " << k + 1 << ": " << dr.clusters[k].cameras.size() << " cameras, " << dr.clusters[k].blocks
                << " blocks, " << dr.clusters[k].wall_s << " s\n";
    finish_single(c, "distributed/aligned", dr.cameras, {}, dr.wall_s, o.gt);
    return 0;
  }
  c.scenario = Scenario::distributed;
  finish(c, run_experiment(c));
  return 0;
}

int cmd_report(const std::vector<std::string>& files, const std::string& out) {
  std::vector<ResultRow> rows;
  for (const auto& f : files) {
    auto r = load_results_csv(f);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  const std::string dir = out.empty() ? "report" : out;
  const auto names = write_report(dir, rows);
  write_summary_table(std::cout, summarize(rows));
  for (const auto& n : names) std::cout << "wrote " << (fs::path(dir) / n).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadrifocal synchronization experiments"};
  app.require_subcommand(1);

  Common synth, sync, joint, dist;
  auto* s = app.add_subcommand("synth", "generate cameras and block files");
  add_common(s, synth);

  auto* y = app.add_subcommand("sync", "QuadSync on synthetic data or a block file");
  add_common(y, sync);
  y->add_option("--subsample-m", sync.subsample_m, "sampled columns per row in the camera updates (0 = all)");
  y->add_option("--input", sync.inputs, "quadrifocal block file")->check(CLI::ExistingFile);
  y->add_option("--gt", sync.gt, "ground truth cameras for the --input run")->check(CLI::ExistingFile);

  auto* j = app.add_subcommand("joint", "joint quadrifocal, trifocal and essential synchronization");
  add_common(j, joint);
  j->add_option("--input", joint.inputs, "block files of any order (repeatable)")->check(CLI::ExistingFile);
  j->add_option("--gt", joint.gt, "ground truth cameras for the --input run")->check(CLI::ExistingFile);

  auto* d = app.add_subcommand("distributed", "cluster-wise QuadSync with overlap merging");
  add_common(d, dist);
  d->add_option("--clusters", dist.clusters, "cluster plan file, one cluster per line")->check(CLI::ExistingFile);
  d->add_option("--subsample-m", dist.subsample_m, "sampled columns per row in the camera updates (0 = all)");
  d->add_option("--input", dist.inputs, "quadrifocal block file")->check(CLI::ExistingFile);
  d->add_option("--gt", dist.gt, "ground truth cameras for the --input run")->check(CLI::ExistingFile);

  std::vector<std::string> report_files;
  std::string report_out;
  auto* r = app.add_subcommand("report", "summary table and SVG charts from result CSVs");
  r->add_option("results", report_files, "results.csv files")->required()->check(CLI::ExistingFile);
  r->add_option("--out", report_out, "output directory (default: report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: invalid_argument: " << e.what() << '\n';
    return 2;
  }

  try {
    if (s->parsed()) return cmd_synth(synth);
    if (y->parsed()) return cmd_sync(sync);
    if (j->parsed()) return cmd_joint(joint);
    if (d->parsed()) return cmd_distributed(dist);
    if (r->parsed()) return cmd_report(report_files, report_out);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
