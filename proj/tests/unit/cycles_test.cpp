#include "qsync/cycles.hpp"
#include "qsync/error.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace qsync {
namespace {

struct Cycle {
  CameraTriple ijk, jkl, kli, lij;
};

Cycle make_cycle(const CameraStack& c, const Quad& q, double noise, std::uint64_t seed, double bad_noise = -1) {
  const int i = q[0], j = q[1], k = q[2], l = q[3];
  Cycle y;
  y.ijk = synthetic_triple(c, {i, j, k}, noise, seed);
  y.jkl = synthetic_triple(c, {j, k, l}, noise, seed + 1);
  y.kli = synthetic_triple(c, {k, l, i}, noise, seed + 2);
  y.lij = synthetic_triple(c, {l, i, j}, bad_noise >= 0 ? bad_noise : noise, seed + 3);
  return y;
}

TEST(Cycles, ExactTriplesCloseTheCycle) {
  const CameraStack c = generate_cameras(6, CameraLayout::generic, 1);
  const Cycle y = make_cycle(c, {0, 2, 3, 5}, 0.0, 10);
  const ChainResult chain = chain_alignments(y.ijk, y.jkl, y.kli, y.lij);
  ASSERT_FALSE(chain.degenerate) << chain.reason;
  for (double r : chain.residuals) EXPECT_LT(r, 1e-8);
  const CycleHeuristic h = cycle_heuristic(chain);
  EXPECT_LT(h.rotation_deg, 1e-6);
  EXPECT_LT(h.location, 1e-8);
  const CycleVerdict v = evaluate_cycle(y.ijk, y.jkl, y.kli, y.lij);
  EXPECT_TRUE(v.accepted) << v.reason;
  EXPECT_TRUE(v.fused.has_value());
}

TEST(Cycles, FusedQuadrupleMatchesGroundTruthUpToSign) {
  const CameraStack c = generate_cameras(6, CameraLayout::collinear, 2);
  const Cycle y = make_cycle(c, {1, 2, 4, 5}, 0.0, 20);
  const QuadBlock fused = fuse_quadruple(chain_alignments(y.ijk, y.jkl, y.kli, y.lij));
  QuadBlock ref = quadrifocal_from_cameras(c.cameras[1], c.cameras[2], c.cameras[4], c.cameras[5]);
  const double n = block_norm(ref);
  double dot = 0;
  for (std::size_t k = 0; k < 81; ++k) {
    ref[k] /= n;
    dot += ref[k] * fused[k];
  }
  EXPECT_NEAR(block_norm(fused), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(dot), 1.0, 1e-8);
}

TEST(Cycles, FusedCamerasAgreeWithChainEstimates) {
  const CameraStack c = generate_cameras(5, CameraLayout::generic, 3);
  const Cycle y = make_cycle(c, {0, 1, 2, 3}, 0.0, 30);
  const ChainResult chain = chain_alignments(y.ijk, y.jkl, y.kli, y.lij);
  const std::array<Mat34, 4> f = fuse_cameras(chain);
  // camera i as seen by the first triple
  const Mat34& a = chain.aligned[0][0];
  const double s = (a.cwiseProduct(f[0])).sum() / f[0].squaredNorm();
  EXPECT_LT((a - s * f[0]).norm(), 1e-8 * a.norm());
}

TEST(Cycles, InconsistentTripleIsRejected) {
  const CameraStack c = generate_cameras(6, CameraLayout::generic, 4);
  const Cycle y = make_cycle(c, {0, 1, 3, 4}, 0.0, 40, 40.0);
  const CycleVerdict v = evaluate_cycle(y.ijk, y.jkl, y.kli, y.lij);
  EXPECT_FALSE(v.accepted);
  EXPECT_FALSE(v.reason.empty());
}

TEST(Cycles, WrongViewsThrow) {
  const CameraStack c = generate_cameras(6, CameraLayout::generic, 5);
  Cycle y = make_cycle(c, {0, 1, 2, 3}, 0.0, 50);
  y.kli = synthetic_triple(c, {2, 4, 0}, 0.0, 51);
  EXPECT_THROW(chain_alignments(y.ijk, y.jkl, y.kli, y.lij), Error);
}

TEST(Cycles, VerdictCsvHasOneRowPerCycle) {
  std::vector<CycleVerdict> v(2);
  v[0].quad = {0, 1, 2, 3};
  v[1].quad = {1, 2, 3, 4};
  v[1].reason = "degenerate overlap";
  std::stringstream ss;
  write_verdicts_csv(ss, v);
  int lines = 0;
  for (std::string s; std::getline(ss, s);) ++lines;
  EXPECT_EQ(lines, 3);
}

TEST(Density, IsolatedCameraIsPruned) {
  std::vector<Quad> quads;
  for (int drop = 0; drop < 5; ++drop) {
    Quad q{};
    int k = 0;
    for (int v = 0; v < 5; ++v)
      if (v != drop) q[static_cast<std::size_t>(k++)] = v;
    quads.push_back(q);
  }
  const ViewingHypergraph h = make_hypergraph(6, quads);
  const std::vector<double> d = vertex_densities(h);
  // C(5,3) = 10 possible quadruples per vertex, 4 observed
  for (int v = 0; v < 5; ++v) EXPECT_DOUBLE_EQ(d[static_cast<std::size_t>(v)], 0.4);
  EXPECT_EQ(d[5], 0.0);
  const ViewingHypergraph p = prune_low_density(h);
  EXPECT_EQ(p.vertices, (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(p.quads.size(), 5u);
  EXPECT_EQ(p.threshold_used, 0.05);
}

TEST(Density, FallsBackToLowerThreshold) {
  // a sparse chain of quadruples: each vertex sits in few of its possible sets
  std::vector<Quad> quads;
  for (int v = 0; v + 3 < 30; ++v) quads.push_back({v, v + 1, v + 2, v + 3});
  const ViewingHypergraph h = make_hypergraph(30, quads);
  const ViewingHypergraph p = prune_low_density(h, {0.5, 0.0001}, 4);
  EXPECT_EQ(p.threshold_used, 0.0001);
  EXPECT_EQ(p.vertices.size(), 30u);
  EXPECT_THROW(prune_low_density(h, {0.001, 0.5}), Error);
  EXPECT_THROW(prune_low_density(h, {0.5}), Error);
}

}  // namespace
}  // namespace qsync
