#include "qsync/geometry.hpp"

#include "qsync/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace qsync {

namespace {

constexpr int kRowPairs[3][2] = {{1, 2}, {0, 2}, {0, 1}};
constexpr int kColPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(g(rng), g(rng), g(rng));
  } while (v.norm() < 1e-8);
  return v.normalized();
}

Eigen::Matrix3d look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target, std::mt19937_64& rng) {
  Eigen::Vector3d z = (target - center).normalized();
  Eigen::Vector3d up = random_unit(rng);
  while (std::abs(up.dot(z)) > 0.9) up = random_unit(rng);
  Eigen::Vector3d x = up.cross(z).normalized();
  Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return r;
}

// Solves the homogeneous system src_k * H - a_k * tgt_k = 0 for vec(H) and a.
ProjectiveAlignment solve_homogeneous(std::span<const CameraCorrespondence> pairs) {
  const Eigen::Index k = static_cast<Eigen::Index>(pairs.size());
  if (k < 2) throw Error(ErrorCode::invalid_argument, "projective alignment needs at least 2 camera correspondences");
  const Eigen::Index unknowns = 16 + k;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(12 * k, unknowns);
  std::vector<double> src_norm(static_cast<std::size_t>(k)), tgt_norm(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto& pr = pairs[static_cast<std::size_t>(c)];
    const double ns = pr.source.norm(), nt = pr.target.norm();
    if (ns == 0.0 || nt == 0.0) throw Error(ErrorCode::degenerate, "zero camera in alignment");
    src_norm[static_cast<std::size_t>(c)] = ns;
    tgt_norm[static_cast<std::size_t>(c)] = nt;
    const Mat34 s = pr.source / ns;
    const Mat34 t = pr.target / nt;
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 4; ++col) {
        const Eigen::Index row = 12 * c + r + 3 * col;
        for (int m = 0; m < 4; ++m) a(row, m + 4 * col) = s(r, m);
        a(row, 16 + c) = -t(r, col);
      }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  Eigen::VectorXd x = svd.matrixV().col(unknowns - 1);
  ProjectiveAlignment out;
  out.residual = sv(unknowns - 1);
  out.degenerate = sv(unknowns - 2) < 1e-10 * sv(0);
  Eigen::Matrix4d h = Eigen::Map<const Eigen::Matrix4d>(x.data());
  const double hn = h.norm();
  if (hn == 0.0) throw Error(ErrorCode::degenerate, "alignment solution has H = 0");
  h /= hn;
  out.scales.resize(static_cast<std::size_t>(k));
  double sum = 0;
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    out.scales[ci] = x(16 + c) / hn * src_norm[ci] / tgt_norm[ci];
    sum += out.scales[ci];
  }
  // det(-H) = det(H) for 4x4, so only the scale signs can be normalized.
  if (sum < 0) {
    h = -h;
    for (double& s : out.scales) s = -s;
  }
  out.H = h;
  return out;
}

}  // namespace

Eigen::MatrixXd CameraStack::stacked() const {
  Eigen::MatrixXd c(3 * size(), 4);
  for (int i = 0; i < size(); ++i) c.block<3, 4>(3 * i, 0) = cameras[static_cast<std::size_t>(i)];
  return c;
}

CameraStack CameraStack::from_stacked(const Eigen::MatrixXd& c) {
  if (c.cols() != 4 || c.rows() % 3 != 0)
    throw Error(ErrorCode::dimension_mismatch, "stacked cameras must be 3n x 4");
  CameraStack s;
  for (Eigen::Index i = 0; i < c.rows() / 3; ++i) s.cameras.push_back(c.block<3, 4>(3 * i, 0));
  return s;
}

CameraStack CameraStack::subset(std::span<const int> indices) const {
  CameraStack s;
  for (int i : indices) {
    if (i < 0 || i >= size()) throw Error(ErrorCode::out_of_range, "camera index out of range");
    s.cameras.push_back(cameras[static_cast<std::size_t>(i)]);
  }
  return s;
}

CameraPose decompose_camera(const Mat34& p_in) {
  Mat34 p = p_in;
  Eigen::Matrix3d m = p.leftCols<3>();
  double d = m.determinant();
  if (!(std::abs(d) > 1e-300) || !std::isfinite(d)) throw Error(ErrorCode::degenerate, "camera has rank < 3");
  double sign = 1.0;
  if (d < 0) {
    sign = -1.0;
    p = -p;
    m = -m;
  }
  // RQ through QR of the row-reversed transpose.
  Eigen::Matrix3d flip = Eigen::Matrix3d::Zero();
  flip(0, 2) = flip(1, 1) = flip(2, 0) = 1.0;
  Eigen::Matrix3d a = (flip * m).transpose();
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(a);
  Eigen::Matrix3d q = qr.householderQ();
  Eigen::Matrix3d r = qr.matrixQR().triangularView<Eigen::Upper>();
  Eigen::Matrix3d k = flip * r.transpose() * flip;
  Eigen::Matrix3d rot = flip * q.transpose();
  for (int i = 0; i < 3; ++i)
    if (k(i, i) < 0) {
      k.col(i) = -k.col(i);
      rot.row(i) = -rot.row(i);
    }
  CameraPose pose;
  pose.scale = sign * k(2, 2);
  pose.K = k / k(2, 2);
  pose.R = rot;
  pose.center = -m.partialPivLu().solve(p.col(3));
  return pose;
}

Mat34 compose_camera(const Eigen::Matrix3d& K, const Eigen::Matrix3d& R, const Eigen::Vector3d& center) {
  Mat34 p;
  p.leftCols<3>() = K * R;
  p.col(3) = -K * R * center;
  return p;
}

Mat36 exterior_square(const Mat34& p) {
  Mat36 e;
  for (int i = 0; i < 3; ++i) {
    const int r0 = kRowPairs[i][0], r1 = kRowPairs[i][1];
    for (int j = 0; j < 6; ++j) {
      const int c0 = kColPairs[j][0], c1 = kColPairs[j][1];
      const double minor = p(r0, c0) * p(r1, c1) - p(r0, c1) * p(r1, c0);
      e(i, j) = i == 1 ? -minor : minor;
    }
  }
  return e;
}

Eigen::MatrixXd line_projection_stack(const CameraStack& c) {
  Eigen::MatrixXd l(3 * c.size(), 6);
  for (int i = 0; i < c.size(); ++i) l.block<3, 6>(3 * i, 0) = exterior_square(c.cameras[static_cast<std::size_t>(i)]);
  return l;
}

Eigen::Matrix<double, 6, 1> plucker_line(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
  Eigen::Matrix<double, 6, 1> l;
  for (int j = 0; j < 6; ++j) {
    const int u = kColPairs[j][0], v = kColPairs[j][1];
    l(j) = a(u) * b(v) - a(v) * b(u);
  }
  return l;
}

CameraStack generate_cameras(int n, CameraLayout layout, std::uint64_t seed, const SceneOptions& opts) {
  if (n < 2) throw Error(ErrorCode::invalid_argument, "generate_cameras needs n >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const Eigen::Vector3d offset = opts.distance * random_unit(rng);
  std::vector<Eigen::Vector3d> centers;
  if (layout == CameraLayout::collinear) {
    Eigen::Vector3d dir = random_unit(rng);
    Eigen::Vector3d along = offset.normalized();
    dir = (dir - dir.dot(along) * along).normalized();
    const double step = n > 1 ? 2.0 * opts.extent / (n - 1) : 0.0;
    for (int i = 0; i < n; ++i) {
      const double s = -opts.extent + step * (i + opts.spacing_jitter * 0.5 * unif(rng));
      centers.push_back(offset + s * dir);
    }
  } else {
    for (int i = 0; i < n; ++i) {
      Eigen::Vector3d v;
      do {
        v = Eigen::Vector3d(unif(rng), unif(rng), unif(rng));
      } while (v.squaredNorm() > 1.0);
      centers.push_back(offset + opts.extent * v);
    }
  }
  std::uniform_real_distribution<double> angle(0.0, opts.max_perturb_deg * std::numbers::pi / 180.0);
  CameraStack out;
  for (const auto& c : centers) {
    Eigen::Matrix3d r = look_at(c, Eigen::Vector3d::Zero(), rng);
    const Eigen::Vector3d axis = random_unit(rng);
    r = axis_angle(axis, angle(rng)) * r;
    out.cameras.push_back(compose_camera(Eigen::Matrix3d::Identity(), r, c));
  }
  return out;
}

CameraStack perturb_cameras(const CameraStack& c, double noise_pct, std::uint64_t seed) {
  if (noise_pct < 0) throw Error(ErrorCode::invalid_argument, "noise percentage must be nonnegative");
  if (noise_pct == 0) return c;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  CameraStack out = c;
  for (auto& p : out.cameras) {
    Mat34 noise;
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 4; ++col) noise(r, col) = g(rng);
    p += (noise_pct / 100.0) * p.norm() * noise / noise.norm();
  }
  return out;
}

ProjectiveAlignment align_overlap(std::span<const CameraCorrespondence> pairs) { return solve_homogeneous(pairs); }

ProjectiveAlignment fit_frame_to_ground_truth(const CameraStack& est, const CameraStack& gt) {
  if (est.size() != gt.size()) throw Error(ErrorCode::dimension_mismatch, "camera stacks differ in size");
  std::vector<CameraCorrespondence> pairs;
  for (int i = 0; i < est.size(); ++i)
    pairs.push_back({est.cameras[static_cast<std::size_t>(i)], gt.cameras[static_cast<std::size_t>(i)]});
  ProjectiveAlignment a = solve_homogeneous(pairs);
  if (a.degenerate) throw Error(ErrorCode::degenerate, "camera stack is rank deficient; frame is not determined");
  return a;
}

CameraStack apply_alignment(const CameraStack& est, const ProjectiveAlignment& a) {
  if (a.scales.size() != est.cameras.size())
    throw Error(ErrorCode::dimension_mismatch, "alignment scale count differs from camera count");
  CameraStack out;
  for (std::size_t i = 0; i < est.cameras.size(); ++i) {
    const double s = a.scales[i] == 0.0 ? 1.0 : a.scales[i];
    out.cameras.push_back(est.cameras[i] * a.H / s);
  }
  return out;
}

CameraStack transform_frame(const CameraStack& c, const Eigen::Matrix4d& h) {
  CameraStack out;
  for (const auto& p : c.cameras) out.cameras.push_back(p * h);
  return out;
}

PoseErrors pose_errors(const CameraStack& est, const CameraStack& gt) {
  if (est.size() != gt.size()) throw Error(ErrorCode::dimension_mismatch, "camera stacks differ in size");
  PoseErrors e;
  std::vector<Eigen::Vector3d> ce, cg;
  for (int i = 0; i < est.size(); ++i) {
    const CameraPose pe = decompose_camera(est.cameras[static_cast<std::size_t>(i)]);
    const CameraPose pg = decompose_camera(gt.cameras[static_cast<std::size_t>(i)]);
    e.rotation_deg.push_back(rotation_distance_deg(pe.R, pg.R));
    ce.push_back(pe.center);
    cg.push_back(pg.center);
  }
  const Similarity s = fit_similarity(ce, cg);
  for (std::size_t i = 0; i < ce.size(); ++i) e.location.push_back((s.scale * s.R * ce[i] + s.t - cg[i]).norm());
  e.mean_rotation = mean_of(e.rotation_deg);
  e.median_rotation = median_of(e.rotation_deg);
  e.mean_location = mean_of(e.location);
  e.median_location = median_of(e.location);
  return e;
}

PoseErrors evaluate_against_ground_truth(const CameraStack& est, const CameraStack& gt) {
  return pose_errors(apply_alignment(est, fit_frame_to_ground_truth(est, gt)), gt);
}

double rotation_distance_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  // atan2 form keeps accuracy near 0 where acos loses half the digits
  const Eigen::Matrix3d r = a * b.transpose();
  const double c = (r.trace() - 1.0) / 2.0;
  const Eigen::Vector3d w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double s = 0.5 * w.norm();
  return std::atan2(s, c) * 180.0 / std::numbers::pi;
}

Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2, 2) = -1;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Eigen::Matrix3d chordal_mean(std::span<const Eigen::Matrix3d> rotations) {
  if (rotations.empty()) throw Error(ErrorCode::invalid_argument, "chordal mean of an empty set");
  Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
  for (const auto& r : rotations) s += r;
  return project_to_so3(s);
}

Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

double relative_location_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                  std::span<const Eigen::Vector3d> reference) {
  if (reference.empty()) throw Error(ErrorCode::invalid_argument, "empty reference set");
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& c : reference) mean += c;
  mean /= static_cast<double>(reference.size());
  double spread = 0;
  for (const auto& c : reference) spread += (c - mean).norm();
  spread /= static_cast<double>(reference.size());
  if (spread == 0.0) throw Error(ErrorCode::degenerate, "reference centers coincide");
  return (a - b).norm() / spread;
}

Similarity fit_similarity(std::span<const Eigen::Vector3d> src, std::span<const Eigen::Vector3d> dst) {
  if (src.size() != dst.size() || src.empty()) throw Error(ErrorCode::dimension_mismatch, "similarity needs paired points");
  Eigen::Matrix3Xd a(3, static_cast<Eigen::Index>(src.size())), b(3, static_cast<Eigen::Index>(dst.size()));
  for (std::size_t i = 0; i < src.size(); ++i) {
    a.col(static_cast<Eigen::Index>(i)) = src[i];
    b.col(static_cast<Eigen::Index>(i)) = dst[i];
  }
  const Eigen::Matrix4d t = Eigen::umeyama(a, b, true);
  Similarity s;
  const Eigen::Matrix3d sr = t.topLeftCorner<3, 3>();
  s.scale = std::cbrt(sr.determinant());
  s.R = sr / s.scale;
  s.t = t.topRightCorner<3, 1>();
  return s;
}

}  // namespace qsync
