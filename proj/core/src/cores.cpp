#include "qsync/cores.hpp"

#include "qsync/error.hpp"
#include "qsync/multifocal.hpp"

#include <cmath>
#include <random>

namespace qsync {

namespace {
constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
constexpr int kLaplace[6] = {1, -1, 1, 1, -1, 1};
}  // namespace

int permutation_parity(const std::array<int, 4>& p) {
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (p[static_cast<std::size_t>(i)] == p[static_cast<std::size_t>(j)]) return 0;
  int inversions = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(j)]) ++inversions;
  return inversions % 2 ? -1 : 1;
}

int levi_civita(int a, int b, int c, int d) { return permutation_parity({a, b, c, d}); }

DenseTensor core_q() {
  DenseTensor g({4, 4, 4, 4});
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) g({a, b, c, d}) = levi_civita(a, b, c, d);
  return g;
}

int laplace_sign(int pair) {
  if (pair < 0 || pair > 5) throw Error(ErrorCode::out_of_range, "column pair index out of range");
  return kLaplace[pair];
}

std::array<int, 2> column_pair(int pair) {
  if (pair < 0 || pair > 5) throw Error(ErrorCode::out_of_range, "column pair index out of range");
  return {kPairs[pair][0], kPairs[pair][1]};
}

DenseTensor core_t() {
  DenseTensor g({6, 4, 4});
  for (int j = 0; j < 6; ++j) {
    const auto [b, c] = column_pair(complement_pair(j));
    g({j, b, c}) = kLaplace[j];
    g({j, c, b}) = -kLaplace[j];
  }
  return g;
}

Mat6 core_e() {
  Mat6 g = Mat6::Zero();
  for (int j = 0; j < 6; ++j) g(j, complement_pair(j)) = kLaplace[j];
  return g;
}

Eigen::Matrix4d contract_core_t_first(const Vec6& y) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  for (int j = 0; j < 6; ++j) {
    const auto [b, c] = column_pair(complement_pair(j));
    m(b, c) += kLaplace[j] * y(j);
    m(c, b) -= kLaplace[j] * y(j);
  }
  return m;
}

Eigen::Matrix<double, 6, 4> contract_core_t_last(const Eigen::Vector4d& v) {
  Eigen::Matrix<double, 6, 4> m = Eigen::Matrix<double, 6, 4>::Zero();
  for (int j = 0; j < 6; ++j) {
    const auto [b, c] = column_pair(complement_pair(j));
    m(j, b) += kLaplace[j] * v(c);
    m(j, c) -= kLaplace[j] * v(b);
  }
  return m;
}

DerivedTrifocalCore derive_trifocal_core(std::uint64_t seed, int fresh_instances) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  auto random_stack = [&](int n) {
    CameraStack c;
    for (int i = 0; i < n; ++i) {
      Mat34 p;
      for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 4; ++k) p(r, k) = g(rng);
      c.cameras.push_back(p);
    }
    return c;
  };
  auto pinv = [](const Eigen::MatrixXd& m) {
    return Eigen::MatrixXd(m.completeOrthogonalDecomposition().pseudoInverse());
  };

  DerivedTrifocalCore out;
  const CameraStack c = random_stack(4);
  const DenseTensor t = block_trifocal_dense(c);
  const Eigen::MatrixXd lp = line_projection_stack(c);
  const Eigen::MatrixXd cs = c.stacked();
  // least-squares solution of t = G x_0 P x_1 C x_2 C
  DenseTensor fit = mode_product(mode_product(mode_product(t, pinv(lp), 0), pinv(cs), 1), pinv(cs), 2);
  {
    DenseTensor recon = mode_product(mode_product(mode_product(fit, lp, 0), cs, 1), cs, 2);
    out.fit_residual = (recon - t).norm() / t.norm();
  }
  DenseTensor core({6, 4, 4});
  for (Index k = 0; k < fit.size(); ++k) {
    const double r = std::round(fit[k]);
    out.max_rounding = std::max(out.max_rounding, std::abs(fit[k] - r));
    core[k] = r;
  }
  if (out.max_rounding > 0.01)
    throw Error(ErrorCode::degenerate, "derived trifocal core is not integral; trifocal sign convention mismatch");
  for (int inst = 0; inst < fresh_instances; ++inst) {
    const CameraStack f = random_stack(3 + inst % 3);
    const DenseTensor tf = block_trifocal_dense(f);
    const DenseTensor recon =
        mode_product(mode_product(mode_product(core, line_projection_stack(f), 0), f.stacked(), 1), f.stacked(), 2);
    out.verify_residual = std::max(out.verify_residual, (recon - tf).norm() / tf.norm());
  }
  out.core = std::move(core);
  return out;
}

}  // namespace qsync
