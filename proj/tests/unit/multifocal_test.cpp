#include "qsync/block_tensor.hpp"
#include "qsync/cores.hpp"
#include "qsync/multifocal.hpp"
#include "qsync/subblocks.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

namespace qsync {
namespace {

TEST(Cores, LeviCivita) {
  EXPECT_EQ(levi_civita(0, 1, 2, 3), 1);
  EXPECT_EQ(levi_civita(1, 0, 2, 3), -1);
  EXPECT_EQ(levi_civita(1, 2, 3, 0), -1);
  EXPECT_EQ(levi_civita(0, 0, 2, 3), 0);
  const DenseTensor g = core_q();
  double s = 0;
  for (Index k = 0; k < g.size(); ++k) s += std::abs(g[k]);
  EXPECT_EQ(s, 24.0);
}

TEST(Cores, EssentialCoreIsSymmetricInvolution) {
  const Mat6 g = core_e();
  EXPECT_EQ((g - g.transpose()).norm(), 0.0);
  EXPECT_EQ((g * g.transpose() - Mat6::Identity()).norm(), 0.0);
}

TEST(Cores, DerivedTrifocalCoreMatchesClosedForm) {
  const DerivedTrifocalCore d = derive_trifocal_core(21);
  EXPECT_LT(d.fit_residual, 1e-10);
  EXPECT_LT(d.verify_residual, 1e-10);
  EXPECT_EQ((d.core - core_t()).norm(), 0.0);
}

TEST(Cores, TrifocalCoreContractions) {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> g;
  const Vec6 y = Vec6::NullaryExpr([&] { return g(rng); });
  const Eigen::Matrix4d a = contract_core_t_first(y);
  EXPECT_LT((a + a.transpose()).norm(), 1e-14);
  const Eigen::Vector4d v(1, -2, 0.5, 3);
  const Eigen::Matrix<double, 6, 4> b = contract_core_t_last(v);
  // y^T (G x_2 v) = (G x_0 y) v
  EXPECT_LT((y.transpose() * b - (a * v).transpose()).norm(), 1e-12);
}

TEST(Multifocal, QuadrifocalEntriesAreDeterminants) {
  std::mt19937_64 rng(23);
  const CameraStack c = test::random_cameras(4, rng);
  const QuadBlock q = quadrifocal_from_cameras(c.cameras[0], c.cameras[1], c.cameras[2], c.cameras[3]);
  for (int p = 0; p < 3; ++p)
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s)
        for (int t = 0; t < 3; ++t) {
          Eigen::Matrix4d m;
          m.row(0) = c.cameras[0].row(p);
          m.row(1) = c.cameras[1].row(r);
          m.row(2) = c.cameras[2].row(s);
          m.row(3) = c.cameras[3].row(t);
          EXPECT_NEAR(q[static_cast<std::size_t>(p + 3 * r + 9 * s + 27 * t)], m.determinant(), 1e-12);
        }
}

TEST(Multifocal, QuadrilinearIncidence) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    const CameraStack c = test::random_cameras(4, rng);
    const QuadBlock q = quadrifocal_from_cameras(c.cameras[0], c.cameras[1], c.cameras[2], c.cameras[3]);
    const Eigen::Vector4d x = test::random_point(rng);
    std::array<Eigen::Vector3d, 4> l;
    for (std::size_t v = 0; v < 4; ++v) l[v] = test::line_through(c.cameras[v] * x, rng);
    double s = 0, mag = 0;
    for (int p = 0; p < 81; ++p) {
      const double term = q[static_cast<std::size_t>(p)] * l[0](p % 3) * l[1](p / 3 % 3) * l[2](p / 9 % 3) * l[3](p / 27);
      s += term;
      mag += std::abs(term);
    }
    EXPECT_LT(std::abs(s), 1e-12 * mag);
  }
}

TEST(Multifocal, TrifocalPointLineLineIncidence) {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 10; ++trial) {
    const CameraStack c = test::random_cameras(3, rng);
    const TriBlock t = trifocal_from_cameras(c.cameras[0], c.cameras[1], c.cameras[2]);
    const Eigen::Vector4d x = test::random_point(rng);
    const Eigen::Vector3d p = c.cameras[0] * x;
    const Eigen::Vector3d l1 = test::line_through(c.cameras[1] * x, rng), l2 = test::line_through(c.cameras[2] * x, rng);
    double s = 0, mag = 0;
    for (int k = 0; k < 27; ++k) {
      const double term = t[static_cast<std::size_t>(k)] * p(k % 3) * l1(k / 3 % 3) * l2(k / 9);
      s += term;
      mag += std::abs(term);
    }
    EXPECT_LT(std::abs(s), 1e-12 * mag);
  }
}

TEST(Multifocal, EssentialEpipolarConstraint) {
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 10; ++trial) {
    const CameraStack c = test::random_cameras(2, rng);
    const Eigen::Matrix3d e = essential_from_cameras(c.cameras[0], c.cameras[1]);
    EXPECT_NEAR(e.determinant() / std::pow(e.norm(), 3), 0.0, 1e-12);
    const Eigen::Vector4d x = test::random_point(rng);
    const Eigen::Vector3d a = c.cameras[0] * x, b = c.cameras[1] * x;
    EXPECT_LT(std::abs(a.dot(e * b)), 1e-12 * e.norm() * a.norm() * b.norm());
    // the epipoles are the left and right null vectors
    const Eigen::Vector4d ca = camera_center_homogeneous(c.cameras[0]), cb = camera_center_homogeneous(c.cameras[1]);
    EXPECT_LT((e.transpose() * (c.cameras[0] * cb)).norm(), 1e-10 * e.norm() * (c.cameras[0] * cb).norm());
    EXPECT_LT((e * (c.cameras[1] * ca)).norm(), 1e-10 * e.norm() * (c.cameras[1] * ca).norm());
  }
}

TEST(Multifocal, EssentialFactorizationThroughLineProjections) {
  std::mt19937_64 rng(27);
  for (int n = 3; n <= 6; ++n) {
    const CameraStack c = test::random_cameras(n, rng);
    const Eigen::MatrixXd l = line_projection_stack(c);
    const Eigen::MatrixXd model = l * core_e() * l.transpose();
    const Eigen::MatrixXd e = block_essential_dense(c);
    EXPECT_LT((model - e).norm(), 1e-10 * e.norm());
  }
}

TEST(Multifocal, BlockQuadrifocalTuckerFactorization) {
  std::mt19937_64 rng(28);
  const CameraStack c = test::random_cameras(4, rng);
  const Eigen::MatrixXd s = c.stacked();
  DenseTensor m = core_q();
  for (int k = 0; k < 4; ++k) m = mode_product(m, s, k);
  const DenseTensor q = block_quadrifocal_dense(c);
  EXPECT_LT((m - q).norm(), 1e-10 * q.norm());
}

TEST(Multifocal, BlockTrifocalTuckerFactorization) {
  std::mt19937_64 rng(29);
  const CameraStack c = test::random_cameras(4, rng);
  DenseTensor m = mode_product(core_t(), line_projection_stack(c), 0);
  m = mode_product(m, c.stacked(), 1);
  m = mode_product(m, c.stacked(), 2);
  const DenseTensor t = block_trifocal_dense(c);
  EXPECT_LT((m - t).norm(), 1e-10 * t.norm());
}

class RankSweep : public ::testing::TestWithParam<int> {};

TEST_P(RankSweep, QuadrifocalMultilinearRank) {
  const int n = GetParam();
  for (auto layout : {CameraLayout::generic, CameraLayout::collinear}) {
    const DenseTensor q = block_quadrifocal_dense(generate_cameras(n, layout, static_cast<std::uint64_t>(n)));
    const MlRank r = mlrank_estimate(q);
    EXPECT_EQ(r.ranks, (std::vector<int>{4, 4, 4, 4}));
    for (double gap : r.singular_gaps) EXPECT_LT(gap, 1e-8);
  }
}

TEST_P(RankSweep, TrifocalMultilinearRank) {
  const int n = GetParam();
  const MlRank g = mlrank_estimate(block_trifocal_dense(generate_cameras(n, CameraLayout::generic, 1)));
  EXPECT_EQ(g.ranks, (std::vector<int>{6, 4, 4}));
  const MlRank c = mlrank_estimate(block_trifocal_dense(generate_cameras(n, CameraLayout::collinear, 1)));
  EXPECT_EQ(c.ranks, (std::vector<int>{5, 4, 4}));
}

TEST_P(RankSweep, ProjectionRanks) {
  const int n = GetParam();
  const CameraStack c = generate_cameras(n, CameraLayout::generic, 2);
  EXPECT_EQ(projection_rank(block_quadrifocal_dense(c), 3, 5), (std::vector<int>{2, 2, 2, 2, 2, 2}));
  EXPECT_EQ(projection_rank(block_trifocal_dense(c), 3, 5), (std::vector<int>{4, 3, 3}));
}

INSTANTIATE_TEST_SUITE_P(Cameras, RankSweep, ::testing::Values(5, 6));

TEST(Subblocks, Classification) {
  EXPECT_EQ(classify({2, 2, 2, 2}), SubblockClass::super_diagonal);
  EXPECT_EQ(classify({1, 3, 1, 1}), SubblockClass::epipole);
  EXPECT_EQ(classify({0, 2, 0, 1}), SubblockClass::trifocal);
  EXPECT_EQ(classify({4, 1, 1, 4}), SubblockClass::fundamental);
  EXPECT_EQ(classify({0, 1, 2, 3}), SubblockClass::generic);
}

TEST(Subblocks, RepeatedIndexBlocksMatchLowerOrderEntities) {
  std::mt19937_64 rng(30);
  const CameraStack c = test::random_cameras(4, rng);
  BlockTensor4 q(4);
  // blocks with repeated cameras straight from the determinant definition
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) {
          if (!(i <= j && j <= k && k <= l)) continue;
          q.set({i, j, k, l}, quadrifocal_from_cameras(c.cameras[static_cast<std::size_t>(i)], c.cameras[static_cast<std::size_t>(j)],
                                                       c.cameras[static_cast<std::size_t>(k)], c.cameras[static_cast<std::size_t>(l)]));
        }
  const std::vector<int> ep{0, 1}, tri{0, 1, 2}, fun{1, 3}, diag{2};
  EXPECT_LT(compare_subblock(q, c, SubblockClass::epipole, ep).residual, 1e-8);
  EXPECT_LT(compare_subblock(q, c, SubblockClass::trifocal, tri).residual, 1e-8);
  EXPECT_LT(compare_subblock(q, c, SubblockClass::fundamental, fun).residual, 1e-8);
  const SubblockComparison d = compare_subblock(q, c, SubblockClass::super_diagonal, diag);
  for (double v : d.extracted) EXPECT_EQ(v, 0.0);
}

TEST(Subblocks, CameraCenterIsNullVector) {
  std::mt19937_64 rng(31);
  const Mat34 p = test::random_camera(rng);
  EXPECT_LT((p * camera_center_homogeneous(p)).norm(), 1e-12 * p.norm());
}

}  // namespace
}  // namespace qsync
