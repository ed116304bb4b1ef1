#include "qsync/distributed.hpp"
#include "qsync/error.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

namespace qsync {
namespace {

std::vector<int> range(int lo, int hi) {
  std::vector<int> v(static_cast<std::size_t>(hi - lo + 1));
  std::iota(v.begin(), v.end(), lo);
  return v;
}

TEST(ClusterPlan, ChainPlanRanges) {
  const ClusterPlan p = chain_plan(30, {10, 15, 15}, 5);
  ASSERT_EQ(p.clusters.size(), 3u);
  EXPECT_EQ(p.clusters[0], range(0, 9));
  EXPECT_EQ(p.clusters[1], range(5, 19));
  EXPECT_EQ(p.clusters[2], range(15, 29));
  EXPECT_EQ(p.overlap(0, 1), range(5, 9));
  EXPECT_TRUE(p.overlap(0, 2).empty());
  EXPECT_EQ(p.order(), (std::vector<int>{0, 1, 2}));
  EXPECT_THROW(chain_plan(31, {10, 15, 15}, 5), Error);
}

TEST(ClusterPlan, ValidationFailures) {
  ClusterPlan p;
  p.clusters = {{0, 1, 2, 3}, {3, 4, 5, 6}};
  EXPECT_THROW(p.validate(7), Error);  // one shared camera
  p.clusters = {{0, 1, 2, 3}, {2, 3, 4, 5}};
  EXPECT_NO_THROW(p.validate(6));
  EXPECT_THROW(p.validate(7), Error);  // camera 6 uncovered
  p.clusters = {{0, 1, 2, 9}, {2, 9, 4, 5}};
  EXPECT_THROW(p.validate(6), Error);
  p.clusters = {{0, 1, 2, 3}, {2, 3, 4, 5}};
  p.merge_order = {1, 1};
  EXPECT_THROW(p.validate(6), Error);
}

TEST(ClusterPlan, FileRoundTrip) {
  std::stringstream ss("# two clusters\n4 5 6 7 8\n0 1 2 3 4 5  # first\n\n");
  const ClusterPlan p = read_cluster_plan(ss);
  ASSERT_EQ(p.clusters.size(), 2u);
  EXPECT_EQ(p.clusters[0], range(4, 8));
  EXPECT_EQ(p.clusters[1], range(0, 5));
  std::stringstream out;
  write_cluster_plan(out, p);
  const ClusterPlan back = read_cluster_plan(out);
  EXPECT_EQ(back.clusters, p.clusters);
  std::stringstream bad("0 1 x 3\n");
  EXPECT_THROW(read_cluster_plan(bad), Error);
}

TEST(Distributed, ExactDataMergesToGroundTruth) {
  const CameraStack gt = generate_cameras(12, CameraLayout::collinear, 3);
  const BlockTensor4 q = build_block_tensor4(gt, full_observation(12).quads, true);
  const ClusterPlan p = chain_plan(12, {6, 6, 6}, 3);
  const DistributedResult r = run_distributed(q, p);
  ASSERT_EQ(r.clusters.size(), 3u);
  EXPECT_EQ(r.clusters[0].blocks, 15u);
  ASSERT_EQ(r.merge_residuals.size(), 2u);
  for (double m : r.merge_residuals) EXPECT_LT(m, 1e-8);
  const PoseErrors e = evaluate_against_ground_truth(r.cameras, gt);
  EXPECT_LT(e.mean_location, 1e-6);
  EXPECT_LT(e.mean_rotation, 1e-6);
}

TEST(Distributed, MergeOrderChangesReferenceOnly) {
  const CameraStack gt = generate_cameras(10, CameraLayout::generic, 4);
  const BlockTensor4 q = build_block_tensor4(gt, full_observation(10).quads, true);
  ClusterPlan p = chain_plan(10, {6, 7}, 3);
  p.merge_order = {1, 0};
  const DistributedResult r = run_distributed(q, p);
  const PoseErrors e = evaluate_against_ground_truth(r.cameras, gt);
  EXPECT_LT(e.mean_location, 1e-6);
}

}  // namespace
}  // namespace qsync
