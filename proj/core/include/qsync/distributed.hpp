#pragma once

// Cluster-partitioned QuadSync with projective merging over shared cameras.

#include "qsync/block_tensor.hpp"
#include "qsync/quadsync.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace qsync {

struct ClusterPlan {
  std::vector<std::vector<int>> clusters;
  // Order in which clusters are merged; empty means 0, 1, 2, ...
  std::vector<int> merge_order;

  std::vector<int> order() const;
  // Cameras shared by clusters a and b, ascending.
  std::vector<int> overlap(int a, int b) const;
  // Throws unless the clusters cover 0..n-1, indices are in range and
  // consecutive clusters in the merge order share at least 2 cameras.
  void validate(int n) const;
};

// One line per cluster with whitespace-separated camera indices; `#` starts
// a comment. The line order is the merge order.
ClusterPlan read_cluster_plan(std::istream& is);
ClusterPlan load_cluster_plan(const std::string& path);
void write_cluster_plan(std::ostream& os, const ClusterPlan& p);

// Consecutive index ranges of the given sizes, each sharing `overlap`
// cameras with the previous one: (30, {10, 15, 15}, 5) gives 0-9, 5-19, 15-29.
ClusterPlan chain_plan(int n, const std::vector<int>& sizes, int overlap);

struct ClusterRun {
  std::vector<int> cameras;
  SyncResult result;  // cameras in the cluster's own frame
  std::size_t blocks = 0;  // observed canonical blocks of the restriction
  double wall_s = 0;
};

struct DistributedResult {
  CameraStack cameras;  // all n cameras in the frame of the first merged cluster
  std::vector<ClusterRun> clusters;
  std::vector<double> merge_residuals;
  double merge_s = 0;
  double wall_s = 0;  // end to end
};

// Cluster solves run concurrently; merging follows the plan's order and
// aligns each cluster through every camera it shares with those already
// placed. A camera keeps the placement of the first cluster containing it.
DistributedResult run_distributed(const BlockTensor4& q, const ClusterPlan& plan, const QuadSyncConfig& cfg = {});

}  // namespace qsync
