#include "qsync/block_io.hpp"
#include "qsync/block_tensor.hpp"
#include "qsync/error.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

namespace qsync {
namespace {

int choose4(int n) { return n * (n - 1) * (n - 2) * (n - 3) / 24; }

TEST(BlockTensor4, FullObservationCounts) {
  const int n = 6;
  const CameraStack c = generate_cameras(n, CameraLayout::generic, 1);
  const BlockTensor4 q = build_block_tensor4(c, full_observation(n).quads, false);
  EXPECT_EQ(q.canonical_count(), static_cast<std::size_t>(choose4(n)));
  EXPECT_EQ(q.observed_count(), static_cast<std::size_t>(24 * choose4(n)));
  EXPECT_TRUE(q.observed({3, 0, 5, 1}));
  EXPECT_FALSE(q.observed({0, 0, 1, 2}));
  for (double v : q.get({0, 0, 1, 2})) EXPECT_EQ(v, 0.0);
}

TEST(BlockTensor4, PermutedTuplesMatchPermutedCameras) {
  std::mt19937_64 rng(41);
  const CameraStack c = test::random_cameras(5, rng);
  const BlockTensor4 q = build_block_tensor4(c, std::vector<Quad>{{0, 1, 3, 4}}, false);
  std::array<int, 4> t{0, 1, 3, 4};
  int checked = 0;
  do {
    const QuadBlock got = q.get(t);
    const QuadBlock ref = quadrifocal_from_cameras(c.cameras[static_cast<std::size_t>(t[0])], c.cameras[static_cast<std::size_t>(t[1])],
                                                   c.cameras[static_cast<std::size_t>(t[2])], c.cameras[static_cast<std::size_t>(t[3])]);
    for (std::size_t k = 0; k < 81; ++k) EXPECT_NEAR(got[k], ref[k], 1e-12);
    ++checked;
  } while (std::next_permutation(t.begin(), t.end()));
  EXPECT_EQ(checked, 24);
}

TEST(BlockTensor4, OrbitSizes) {
  BlockTensor4 q(4);
  QuadBlock z{};
  z[5] = 1.0;
  q.set({0, 1, 2, 3}, z);
  EXPECT_EQ(q.orbit_size(0), 24);
  const QuadPermutations& p = QuadPermutations::get();
  int even = 0;
  for (int s : p.sign) even += s > 0;
  EXPECT_EQ(even, 12);
}

TEST(BlockTensor4, NormalizeAndDense) {
  const CameraStack c = generate_cameras(5, CameraLayout::collinear, 2);
  BlockTensor4 q = build_block_tensor4(c, full_observation(5).quads, true);
  for (std::size_t k = 0; k < q.canonical_count(); ++k) EXPECT_NEAR(block_norm(q.canonical_block(k)), 1.0, 1e-14);
  const DenseTensor d = q.to_dense();
  // 24 unit blocks per canonical quadruple
  EXPECT_NEAR(d.norm() * d.norm(), 24.0 * 5, 1e-10);
}

TEST(BlockTensor4, RestrictionEqualsSubsetBuild) {
  const CameraStack c = generate_cameras(7, CameraLayout::generic, 3);
  const BlockTensor4 full = build_block_tensor4(c, full_observation(7).quads, false);
  const std::vector<int> keep{6, 2, 4, 0, 5};
  const BlockTensor4 r = full.restrict_to(keep);
  const BlockTensor4 direct = build_block_tensor4(c.subset(keep), full_observation(5).quads, false);
  ASSERT_EQ(r.canonical_count(), direct.canonical_count());
  for (std::size_t k = 0; k < r.canonical_count(); ++k) {
    const QuadBlock a = r.get(r.canonical_index(k)), b = direct.get(r.canonical_index(k));
    for (std::size_t e = 0; e < 81; ++e) EXPECT_NEAR(a[e], b[e], 1e-12);
  }
}

TEST(BlockTensor4, SampleQuadruples) {
  const auto a = sample_quadruples(10, 60, 7), b = sample_quadruples(10, 60, 7), c = sample_quadruples(10, 60, 8);
  EXPECT_EQ(a.size(), static_cast<std::size_t>(std::llround(0.6 * choose4(10))));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(std::set<Quad>(a.begin(), a.end()).size(), a.size());
  for (const Quad& q : a) EXPECT_TRUE(q[0] < q[1] && q[1] < q[2] && q[2] < q[3]);
  EXPECT_EQ(sample_quadruples(10, 100, 1).size(), static_cast<std::size_t>(choose4(10)));
  EXPECT_THROW(sample_quadruples(10, 0, 1), Error);
  EXPECT_THROW(sample_quadruples(10, 101, 1), Error);
}

TEST(BlockTensor4, ZeroNoiseBuilderMatchesExact) {
  const CameraStack c = generate_cameras(6, CameraLayout::generic, 4);
  const auto quads = full_observation(6).quads;
  const BlockTensor4 a = build_block_tensor4(c, quads, true), b = build_noisy_block_tensor4(c, quads, 0.0, 9, true);
  for (std::size_t k = 0; k < a.canonical_count(); ++k) EXPECT_EQ(a.canonical_block(k), b.canonical_block(k));
}

TEST(BlockTensor3, AllOrderingsFilled) {
  std::mt19937_64 rng(42);
  const CameraStack c = test::random_cameras(4, rng);
  const BlockTensor3 t = build_block_tensor3(c, full_observation(4).triples, false);
  EXPECT_EQ(t.observed_count(), 24u);
  const TriBlock got = t.get({2, 0, 3});
  const TriBlock ref = trifocal_from_cameras(c.cameras[2], c.cameras[0], c.cameras[3]);
  for (std::size_t k = 0; k < 27; ++k) EXPECT_NEAR(got[k], ref[k], 1e-12);
  const BlockTensor3 noisy0 = build_noisy_block_tensor3(c, full_observation(4).triples, 0.0, 1, false);
  EXPECT_EQ(noisy0.get({2, 0, 3}), t.get({2, 0, 3}));
}

TEST(BlockMatrix, BothOrderingsFilled) {
  std::mt19937_64 rng(43);
  const CameraStack c = test::random_cameras(3, rng);
  const BlockMatrix e = build_block_matrix(c, full_observation(3).pairs, false);
  EXPECT_EQ(e.observed_count(), 6u);
  const Eigen::Matrix3d ref = essential_from_cameras(c.cameras[2], c.cameras[1]);
  const PairBlock b = e.get({2, 1});
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) EXPECT_NEAR(b[static_cast<std::size_t>(k + 3 * l)], ref(k, l), 1e-12);
  const BlockMatrix noisy = build_noisy_block_matrix(c, full_observation(3).pairs, 2.0, 5, false);
  const PairBlock x = noisy.get({1, 2}), y = noisy.get({2, 1});
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) EXPECT_EQ(x[static_cast<std::size_t>(k + 3 * l)], y[static_cast<std::size_t>(l + 3 * k)]);
}

TEST(BlockIo, RoundTripIsBitExact) {
  const CameraStack c = perturb_cameras(generate_cameras(5, CameraLayout::generic, 5), 3.0, 1);
  const Observation o = full_observation(5);
  const BlockTensor4 q = build_noisy_block_tensor4(c, sample_quadruples(5, 80, 2), 1.0, 3, true);
  const BlockTensor3 t = build_block_tensor3(c, o.triples, true);
  const BlockMatrix e = build_block_matrix(c, o.pairs, true);
  std::stringstream s4, s3, s2;
  write_blocks(s4, q);
  write_blocks(s3, t);
  write_blocks(s2, e);
  const BlockTensor4 q2 = std::get<BlockTensor4>(read_blocks(s4));
  const BlockTensor3 t2 = std::get<BlockTensor3>(read_blocks(s3));
  const BlockMatrix e2 = std::get<BlockMatrix>(read_blocks(s2));
  ASSERT_EQ(q2.canonical_count(), q.canonical_count());
  for (std::size_t k = 0; k < q.canonical_count(); ++k) {
    EXPECT_EQ(q2.canonical_index(k), q.canonical_index(k));
    EXPECT_EQ(q2.canonical_block(k), q.canonical_block(k));
  }
  for (const Triple& tr : t.observed_tuples()) EXPECT_EQ(t2.get(tr), t.get(tr));
  for (const Pair& p : e.observed_tuples()) EXPECT_EQ(e2.get(p), e.get(p));
}

TEST(BlockIo, MalformedInputReportsParseError) {
  for (const char* text : {"", "4 2 1\n0 1 2 3\n1 2\n", "5 4 1\n0 1 2 9\n", "4 4 1\n0 1 2 3\n" "x"}) {
    std::stringstream ss(text);
    try {
      read_blocks(ss);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == ErrorCode::parse || e.code() == ErrorCode::out_of_range) << e.what();
    }
  }
}

}  // namespace
}  // namespace qsync
