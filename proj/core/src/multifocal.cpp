#include "qsync/multifocal.hpp"

#include "qsync/cores.hpp"
#include "qsync/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace qsync {

namespace {

double det4(const Eigen::RowVector4d& a, const Eigen::RowVector4d& b, const Eigen::RowVector4d& c,
            const Eigen::RowVector4d& d) {
  Eigen::Matrix4d m;
  m << a, b, c, d;
  return m.determinant();
}

// Rows of p other than `skip`, in order.
std::array<int, 2> other_rows(int skip) {
  if (skip == 0) return {1, 2};
  if (skip == 1) return {0, 2};
  return {0, 1};
}

}  // namespace

QuadBlock quadrifocal_from_cameras(const Mat34& a, const Mat34& b, const Mat34& c, const Mat34& d) {
  QuadBlock q{};
  for (int s = 0; s < 3; ++s)
    for (int r = 0; r < 3; ++r)
      for (int qq = 0; qq < 3; ++qq)
        for (int p = 0; p < 3; ++p) q[static_cast<std::size_t>(p + 3 * qq + 9 * r + 27 * s)] = det4(a.row(p), b.row(qq), c.row(r), d.row(s));
  return q;
}

TriBlock trifocal_from_cameras(const Mat34& a, const Mat34& b, const Mat34& c) {
  TriBlock t{};
  for (int w = 0; w < 3; ++w) {
    const auto rows = other_rows(w);
    const double sign = w == 1 ? -1.0 : 1.0;
    for (int q = 0; q < 3; ++q)
      for (int r = 0; r < 3; ++r)
        t[static_cast<std::size_t>(w + 3 * q + 9 * r)] = sign * det4(a.row(rows[0]), a.row(rows[1]), b.row(q), c.row(r));
  }
  return t;
}

Eigen::Matrix3d essential_from_cameras(const Mat34& a, const Mat34& b) {
  Eigen::Matrix3d e;
  for (int k = 0; k < 3; ++k) {
    const auto ra = other_rows(k);
    for (int l = 0; l < 3; ++l) {
      const auto rb = other_rows(l);
      const double sign = (k + l) % 2 ? -1.0 : 1.0;
      e(k, l) = sign * det4(a.row(ra[0]), a.row(ra[1]), b.row(rb[0]), b.row(rb[1]));
    }
  }
  return e;
}

DenseTensor block_quadrifocal_dense(const CameraStack& c) {
  const int n = c.size();
  const Index m = 3 * n;
  DenseTensor t({m, m, m, m});
  auto data = t.data();
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const auto& P = c.cameras;
          const QuadBlock b = quadrifocal_from_cameras(P[static_cast<std::size_t>(i)], P[static_cast<std::size_t>(j)],
                                                       P[static_cast<std::size_t>(k)], P[static_cast<std::size_t>(l)]);
          for (int s = 0; s < 3; ++s)
            for (int r = 0; r < 3; ++r)
              for (int q = 0; q < 3; ++q)
                for (int p = 0; p < 3; ++p)
                  data[static_cast<std::size_t>((3 * i + p) + m * ((3 * j + q) + m * ((3 * k + r) + m * (3 * l + s))))] =
                      b[static_cast<std::size_t>(p + 3 * q + 9 * r + 27 * s)];
        }
  return t;
}

DenseTensor block_trifocal_dense(const CameraStack& c) {
  const int n = c.size();
  const Index m = 3 * n;
  DenseTensor t({m, m, m});
  auto data = t.data();
  const auto& P = c.cameras;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const TriBlock b = trifocal_from_cameras(P[static_cast<std::size_t>(i)], P[static_cast<std::size_t>(j)],
                                                 P[static_cast<std::size_t>(k)]);
        for (int r = 0; r < 3; ++r)
          for (int q = 0; q < 3; ++q)
            for (int w = 0; w < 3; ++w)
              data[static_cast<std::size_t>((3 * i + w) + m * ((3 * j + q) + m * (3 * k + r)))] =
                  b[static_cast<std::size_t>(w + 3 * q + 9 * r)];
      }
  return t;
}

Eigen::MatrixXd block_essential_dense(const CameraStack& c) {
  const int n = c.size();
  Eigen::MatrixXd e(3 * n, 3 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      e.block<3, 3>(3 * i, 3 * j) =
          essential_from_cameras(c.cameras[static_cast<std::size_t>(i)], c.cameras[static_cast<std::size_t>(j)]);
  return e;
}

double block_norm(const QuadBlock& b) {
  double s = 0;
  for (double v : b) s += v * v;
  return std::sqrt(s);
}

double block_norm(const TriBlock& b) {
  double s = 0;
  for (double v : b) s += v * v;
  return std::sqrt(s);
}

double block_norm(const PairBlock& b) {
  double s = 0;
  for (double v : b) s += v * v;
  return std::sqrt(s);
}

std::vector<int> projection_rank(const DenseTensor& t, int trials, std::uint64_t seed, double tol) {
  if (t.order() < 3) throw Error(ErrorCode::invalid_argument, "projection rank needs order >= 3");
  if (trials < 1) throw Error(ErrorCode::invalid_argument, "projection rank needs at least one trial");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<std::vector<int>> contracted;
  if (t.order() == 4) {
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) contracted.push_back({a, b});
  } else {
    for (int a = 0; a < 3; ++a) contracted.push_back({a});
  }
  std::vector<int> out;
  for (const auto& modes : contracted) {
    std::map<int, int> votes;
    for (int trial = 0; trial < trials; ++trial) {
      DenseTensor r = t;
      for (int m : modes) {
        Eigen::MatrixXd x(1, t.dim(m));
        for (Index k = 0; k < x.cols(); ++k) x(0, k) = g(rng);
        r = mode_product(r, x, m);
      }
      int keep = 0;
      while (std::find(modes.begin(), modes.end(), keep) != modes.end()) ++keep;
      ++votes[numerical_rank(flatten(r, keep), tol)];
    }
    int best = 0, count = -1;
    for (const auto& [rank, c] : votes)
      if (c > count) {
        best = rank;
        count = c;
      }
    out.push_back(best);
  }
  return out;
}

}  // namespace qsync
