#include "qsync/subblocks.hpp"

#include "qsync/error.hpp"
#include "qsync/multifocal.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace qsync {

namespace {

constexpr int kOther[3][2] = {{1, 2}, {0, 2}, {0, 1}};

int qi(int p, int q, int r, int s) { return p + 3 * q + 9 * r + 27 * s; }

}  // namespace

SubblockClass classify(const Quad& q) {
  std::map<int, int> counts;
  for (int v : q) ++counts[v];
  std::vector<int> m;
  for (const auto& [v, c] : counts) m.push_back(c);
  std::sort(m.rbegin(), m.rend());
  if (m[0] == 4) return SubblockClass::super_diagonal;
  if (m[0] == 3) return SubblockClass::epipole;
  if (m[0] == 2 && m.size() == 2) return SubblockClass::fundamental;
  if (m[0] == 2) return SubblockClass::trifocal;
  return SubblockClass::generic;
}

Eigen::Vector4d camera_center_homogeneous(const Mat34& p) {
  Eigen::Vector4d c;
  // cofactor expansion: c_k = (-1)^k det(p without column k)
  for (int k = 0; k < 4; ++k) {
    Eigen::Matrix3d m;
    int col = 0;
    for (int j = 0; j < 4; ++j)
      if (j != k) m.col(col++) = p.col(j);
    c(k) = (k % 2 ? -1.0 : 1.0) * m.determinant();
  }
  return c;
}

SubblockComparison compare_subblock(const BlockTensor4& q, const CameraStack& cameras, SubblockClass cls,
                                    std::span<const int> views) {
  auto need = [&](std::size_t k) {
    if (views.size() != k) throw Error(ErrorCode::invalid_argument, "wrong number of views for sub-block class");
    for (int v : views)
      if (v < 0 || v >= cameras.size() || v >= q.n()) throw Error(ErrorCode::out_of_range, "view index out of range");
  };
  auto fetch = [&](const Quad& idx) {
    if (!q.observed(idx)) throw Error(ErrorCode::invalid_argument, "requested sub-block is unobserved");
    return q.get(idx);
  };
  const auto cam = [&](int v) -> const Mat34& { return cameras.cameras[static_cast<std::size_t>(v)]; };

  SubblockComparison out;
  out.cls = cls;
  switch (cls) {
    case SubblockClass::super_diagonal: {
      need(1);
      const int i = views[0];
      const QuadBlock b = fetch({i, i, i, i});
      out.extracted.assign(b.begin(), b.end());
      out.reference.assign(81, 0.0);
      break;
    }
    case SubblockClass::epipole: {
      need(2);
      const int i = views[0], j = views[1];
      const QuadBlock b = fetch({i, i, i, j});
      const Eigen::Vector3d e = cam(j) * camera_center_homogeneous(cam(i));
      for (int s = 0; s < 3; ++s) {
        out.extracted.push_back(b[static_cast<std::size_t>(qi(0, 1, 2, s))]);
        out.reference.push_back(e(s));
      }
      break;
    }
    case SubblockClass::trifocal: {
      need(3);
      const int i = views[0], j = views[1], k = views[2];
      const QuadBlock b = fetch({i, i, j, k});
      const TriBlock t = trifocal_from_cameras(cam(i), cam(j), cam(k));
      for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s)
          for (int w = 0; w < 3; ++w) {
            const double sign = w == 1 ? -1.0 : 1.0;
            out.extracted.push_back(sign * b[static_cast<std::size_t>(qi(kOther[w][0], kOther[w][1], r, s))]);
            out.reference.push_back(t[static_cast<std::size_t>(w + 3 * r + 9 * s)]);
          }
      break;
    }
    case SubblockClass::fundamental: {
      need(2);
      const int i = views[0], j = views[1];
      const QuadBlock b = fetch({i, i, j, j});
      const Eigen::Matrix3d e = essential_from_cameras(cam(i), cam(j));
      for (int l = 0; l < 3; ++l)
        for (int k = 0; k < 3; ++k) {
          const double sign = (k + l) % 2 ? -1.0 : 1.0;
          out.extracted.push_back(sign * b[static_cast<std::size_t>(qi(kOther[k][0], kOther[k][1], kOther[l][0], kOther[l][1]))]);
          out.reference.push_back(e(k, l));
        }
      break;
    }
    case SubblockClass::generic:
      throw Error(ErrorCode::invalid_argument, "generic blocks have no sub-block reference");
  }
  const Eigen::Map<const Eigen::VectorXd> x(out.extracted.data(), static_cast<Index>(out.extracted.size()));
  const Eigen::Map<const Eigen::VectorXd> r(out.reference.data(), static_cast<Index>(out.reference.size()));
  const double rr = r.squaredNorm();
  out.alpha = rr > 0 ? x.dot(r) / rr : 0.0;
  const double xn = x.norm();
  out.residual = xn > 0 ? (x - out.alpha * r).norm() / xn : 0.0;
  if (cls == SubblockClass::super_diagonal) out.residual = xn;
  return out;
}

}  // namespace qsync
