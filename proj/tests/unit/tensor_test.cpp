#include "qsync/tensor.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <array>

namespace qsync {
namespace {

TEST(Tensor, LinearIndexFirstIndexFastest) {
  DenseTensor t({2, 3, 4});
  t({1, 2, 3}) = 7.0;
  EXPECT_EQ(t[1 + 2 * (2 + 3 * 3)], 7.0);
}

TEST(Tensor, FlattenUnflattenRoundTrip) {
  std::mt19937_64 rng(1);
  const DenseTensor t = DenseTensor::random_normal({3, 4, 2, 5}, rng);
  for (int m = 0; m < 4; ++m) {
    const Eigen::MatrixXd f = flatten(t, m);
    EXPECT_EQ(f.rows(), t.dim(m));
    const DenseTensor back = unflatten(f, m, t.dims());
    EXPECT_EQ((back - t).norm(), 0.0) << "mode " << m;
  }
}

TEST(Tensor, FlattenColumnOrderLowestModeFastest) {
  DenseTensor t({2, 3, 4});
  t({1, 2, 3}) = 1.0;
  const Eigen::MatrixXd f = flatten(t, 1);
  // remaining modes 0 and 2, mode 0 fastest
  EXPECT_EQ(f(2, 1 + 2 * 3), 1.0);
  EXPECT_EQ(f.sum(), 1.0);
}

TEST(Tensor, ModeProductMatchesLoops) {
  std::mt19937_64 rng(2);
  const DenseTensor t3 = DenseTensor::random_normal({3, 4, 2}, rng);
  const DenseTensor t4 = DenseTensor::random_normal({2, 3, 2, 3}, rng);
  std::normal_distribution<double> g;
  for (int m = 0; m < 3; ++m) {
    Eigen::MatrixXd u = Eigen::MatrixXd::NullaryExpr(5, t3.dim(m), [&] { return g(rng); });
    EXPECT_LT((mode_product(t3, u, m) - test::loop_mode_product(t3, u, m)).norm(), 1e-12);
  }
  for (int m = 0; m < 4; ++m) {
    Eigen::MatrixXd u = Eigen::MatrixXd::NullaryExpr(4, t4.dim(m), [&] { return g(rng); });
    EXPECT_LT((mode_product(t4, u, m) - test::loop_mode_product(t4, u, m)).norm(), 1e-12);
  }
}

TEST(Tensor, TuckerFlatteningIdentity) {
  std::mt19937_64 rng(3);
  const DenseTensor core = DenseTensor::random_normal({2, 3, 2, 2}, rng);
  std::vector<Eigen::MatrixXd> u;
  std::normal_distribution<double> g;
  const int rows[4] = {4, 5, 3, 4};
  for (int m = 0; m < 4; ++m) u.push_back(Eigen::MatrixXd::NullaryExpr(rows[m], core.dim(m), [&] { return g(rng); }));
  DenseTensor x = core;
  for (int m = 0; m < 4; ++m) x = mode_product(x, u[static_cast<std::size_t>(m)], m);
  for (int m = 0; m < 4; ++m) {
    const Eigen::MatrixXd rhs = u[static_cast<std::size_t>(m)] * flatten(core, m) * kron_except(u, m).transpose();
    EXPECT_LT((flatten(x, m) - rhs).norm(), 1e-10 * rhs.norm()) << "mode " << m;
  }
}

TEST(Tensor, KronMatchesDefinition) {
  Eigen::MatrixXd a(2, 2), b(2, 3);
  a << 1, 2, 3, 4;
  b << 0, 5, -1, 6, 7, 8;
  const Eigen::MatrixXd k = kron(a, b);
  ASSERT_EQ(k.rows(), 4);
  ASSERT_EQ(k.cols(), 6);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 3; ++q) EXPECT_EQ(k(2 * i + p, 3 * j + q), a(i, j) * b(p, q));
}

TEST(Tensor, HosvdRecoversExactLowRank) {
  std::mt19937_64 rng(4);
  const DenseTensor core = DenseTensor::random_normal({2, 3, 2}, rng);
  DenseTensor x = core;
  x = mode_product(x, test::orthonormal(5, 2, rng), 0);
  x = mode_product(x, test::orthonormal(6, 3, rng), 1);
  x = mode_product(x, test::orthonormal(4, 2, rng), 2);
  const std::array<int, 3> r{2, 3, 2};
  const TuckerFactorization f = hosvd(x, r);
  EXPECT_LT((f.reconstruct() - x).norm(), 1e-12 * x.norm());
  const MlRank mr = mlrank_estimate(x);
  EXPECT_EQ(mr.ranks, (std::vector<int>{2, 3, 2}));
}

TEST(Tensor, HosvdTruncationErrorBound) {
  // ||X - X_hosvd||^2 <= sum over modes of the discarded squared singular values
  std::mt19937_64 rng(5);
  const DenseTensor x = DenseTensor::random_normal({4, 5, 3, 4}, rng);
  const std::array<int, 4> r{2, 2, 2, 2};
  const TuckerFactorization f = hosvd(x, r);
  double bound = 0;
  for (int m = 0; m < 4; ++m) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(flatten(x, m));
    const Eigen::VectorXd s = svd.singularValues();
    for (Index k = r[static_cast<std::size_t>(m)]; k < s.size(); ++k) bound += s(k) * s(k);
  }
  const double err = (f.reconstruct() - x).norm();
  EXPECT_LE(err * err, bound * (1 + 1e-12));
  // quasi-optimality: within sqrt(N) of the best rank-(2,2,2,2) error, which
  // is at least the largest single-mode discarded energy
  double best_lower = 0;
  for (int m = 0; m < 4; ++m) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(flatten(x, m));
    const Eigen::VectorXd s = svd.singularValues();
    best_lower = std::max(best_lower, s.tail(s.size() - 2).norm());
  }
  EXPECT_LE(err, 2.0 * std::sqrt(bound));
  EXPECT_GE(err + 1e-12, best_lower);
}

TEST(Tensor, HosvdSignNormalization) {
  std::mt19937_64 rng(6);
  const DenseTensor x = DenseTensor::random_normal({4, 4, 4}, rng);
  const std::array<int, 3> r{3, 3, 3};
  const TuckerFactorization f = hosvd(x, r);
  for (const auto& u : f.factors)
    for (Index c = 0; c < u.cols(); ++c) {
      Index arg = 0;
      u.col(c).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(u(arg, c), 0.0);
    }
}

TEST(Tensor, ZeroTensorIsDegenerate) {
  const DenseTensor x({3, 3, 3});
  const std::array<int, 3> r{1, 1, 1};
  EXPECT_TRUE(hosvd(x, r).degenerate);
}

TEST(Tensor, SingularValuesKeepRelativeAccuracy) {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd u = test::orthonormal(6, 5, rng), v = test::orthonormal(300, 5, rng);
  Eigen::VectorXd s(5);
  s << 1.0, 0.5, 1e-3, 1e-7, 1e-11;
  const Eigen::MatrixXd m = u * s.asDiagonal() * v.transpose();
  const Eigen::VectorXd got = singular_values(m);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(got(k) / s(k), 1.0, 1e-4) << k;
  EXPECT_EQ(numerical_rank(m, 1e-9), 4);
}

TEST(Tensor, LeadingVectorsGramAndSvdAgree) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  const Eigen::MatrixXd wide = Eigen::MatrixXd::NullaryExpr(6, 200, [&] { return g(rng); });
  const Eigen::MatrixXd a = leading_left_singular_vectors(wide, 3);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(wide, Eigen::ComputeThinU);
  EXPECT_LT(test::subspace_distance(a, svd.matrixU().leftCols(3)), 1e-10);
}

}  // namespace
}  // namespace qsync
