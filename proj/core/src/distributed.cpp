#include "qsync/distributed.hpp"

#include "qsync/error.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <future>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace qsync {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::vector<int> ClusterPlan::order() const {
  if (!merge_order.empty()) return merge_order;
  std::vector<int> o(clusters.size());
  std::iota(o.begin(), o.end(), 0);
  return o;
}

std::vector<int> ClusterPlan::overlap(int a, int b) const {
  std::vector<int> x = clusters.at(static_cast<std::size_t>(a)), y = clusters.at(static_cast<std::size_t>(b));
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::vector<int> out;
  std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
  return out;
}

void ClusterPlan::validate(int n) const {
  if (clusters.empty()) throw Error(ErrorCode::invalid_argument, "cluster plan is empty");
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const auto& c : clusters) {
    if (c.size() < 4) throw Error(ErrorCode::invalid_argument, "every cluster needs at least 4 cameras");
    std::vector<int> s = c;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end())
      throw Error(ErrorCode::invalid_argument, "cluster lists a camera twice");
    for (int v : c) {
      if (v < 0 || v >= n) throw Error(ErrorCode::out_of_range, "cluster camera index " + std::to_string(v) + " out of range");
      seen[static_cast<std::size_t>(v)] = 1;
    }
  }
  for (int v = 0; v < n; ++v)
    if (!seen[static_cast<std::size_t>(v)]) throw Error(ErrorCode::invalid_argument, "camera " + std::to_string(v) + " is in no cluster");
  const std::vector<int> o = order();
  std::vector<int> sorted_o = o;
  std::sort(sorted_o.begin(), sorted_o.end());
  std::vector<int> expect(clusters.size());
  std::iota(expect.begin(), expect.end(), 0);
  if (sorted_o != expect) throw Error(ErrorCode::invalid_argument, "merge order must list every cluster once");
  for (std::size_t k = 1; k < o.size(); ++k)
    if (overlap(o[k - 1], o[k]).size() < 2)
      throw Error(ErrorCode::invalid_argument, "clusters " + std::to_string(o[k - 1]) + " and " + std::to_string(o[k]) +
                                                   " share fewer than 2 cameras");
}

ClusterPlan read_cluster_plan(std::istream& is) {
  ClusterPlan p;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::vector<int> c;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        c.push_back(std::stoi(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(ErrorCode::parse, "cluster plan line " + std::to_string(lineno) + ": bad camera index '" + tok + "'");
      }
    }
    if (!c.empty()) p.clusters.push_back(std::move(c));
  }
  if (p.clusters.empty()) throw Error(ErrorCode::parse, "cluster plan has no clusters");
  return p;
}

ClusterPlan load_cluster_plan(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::io, "cannot open cluster plan " + path);
  return read_cluster_plan(f);
}

void write_cluster_plan(std::ostream& os, const ClusterPlan& p) {
  for (int k : p.order()) {
    const auto& c = p.clusters[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < c.size(); ++i) os << (i ? " " : "") << c[i];
    os << '\n';
  }
}

ClusterPlan chain_plan(int n, const std::vector<int>& sizes, int overlap) {
  if (sizes.empty() || overlap < 0) throw Error(ErrorCode::invalid_argument, "bad chain plan shape");
  ClusterPlan p;
  int start = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    std::vector<int> c(static_cast<std::size_t>(sizes[k]));
    std::iota(c.begin(), c.end(), start);
    start += sizes[k] - overlap;
    p.clusters.push_back(std::move(c));
  }
  p.validate(n);
  if (p.clusters.back().back() != n - 1) throw Error(ErrorCode::invalid_argument, "chain plan does not end at the last camera");
  return p;
}

DistributedResult run_distributed(const BlockTensor4& q, const ClusterPlan& plan, const QuadSyncConfig& cfg) {
  const auto t0 = Clock::now();
  const int n = q.n();
  plan.validate(n);
  DistributedResult out;
  out.clusters.resize(plan.clusters.size());
  std::vector<std::future<void>> jobs;
  for (std::size_t k = 0; k < plan.clusters.size(); ++k)
    jobs.push_back(std::async(std::launch::async, [&, k] {
      const auto c0 = Clock::now();
      ClusterRun& run = out.clusters[k];
      run.cameras = plan.clusters[k];
      const BlockTensor4 sub = q.restrict_to(run.cameras);
      run.blocks = sub.canonical_count();
      run.result = run_quadsync(sub, cfg);
      run.wall_s = seconds_since(c0);
    }));
  for (auto& j : jobs) j.get();

  const auto m0 = Clock::now();
  std::vector<Mat34> placed(static_cast<std::size_t>(n));
  std::vector<char> have(static_cast<std::size_t>(n), 0);
  bool first = true;
  for (int k : plan.order()) {
    const ClusterRun& run = out.clusters[static_cast<std::size_t>(k)];
    Eigen::Matrix4d h = Eigen::Matrix4d::Identity();
    std::vector<double> scale(run.cameras.size(), 1.0);
    if (!first) {
      std::vector<CameraCorrespondence> pairs;
      for (std::size_t i = 0; i < run.cameras.size(); ++i)
        if (have[static_cast<std::size_t>(run.cameras[i])])
          pairs.push_back({run.result.cameras.cameras[i], placed[static_cast<std::size_t>(run.cameras[i])]});
      if (pairs.size() < 2)
        throw Error(ErrorCode::degenerate, "cluster " + std::to_string(k) + " shares fewer than 2 placed cameras");
      const ProjectiveAlignment a = align_overlap(pairs);
      if (a.degenerate) throw Error(ErrorCode::degenerate, "overlap alignment of cluster " + std::to_string(k) + " is rank deficient");
      out.merge_residuals.push_back(a.residual);
      h = a.H;
      // per camera scale is free; use the mean overlap scale for new cameras
      double s = 0;
      for (double v : a.scales) s += v;
      s /= static_cast<double>(a.scales.size());
      std::fill(scale.begin(), scale.end(), s == 0.0 ? 1.0 : s);
    }
    for (std::size_t i = 0; i < run.cameras.size(); ++i) {
      const auto v = static_cast<std::size_t>(run.cameras[i]);
      if (have[v]) continue;
      placed[v] = run.result.cameras.cameras[i] * h / scale[i];
      have[v] = 1;
    }
    first = false;
  }
  out.cameras.cameras = placed;
  out.merge_s = seconds_since(m0);
  out.wall_s = seconds_since(t0);
  return out;
}

}  // namespace qsync
