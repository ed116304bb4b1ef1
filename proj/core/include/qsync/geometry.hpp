#pragma once

// Projective cameras, synthetic scenes, frame alignment and pose metrics.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace qsync {

using Mat34 = Eigen::Matrix<double, 3, 4>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

struct CameraStack {
  std::vector<Mat34> cameras;

  int size() const { return static_cast<int>(cameras.size()); }
  // 3n x 4 vertical concatenation.
  Eigen::MatrixXd stacked() const;
  static CameraStack from_stacked(const Eigen::MatrixXd& c);
  CameraStack subset(std::span<const int> indices) const;
};

// P = scale * K * R * [I | -center], K upper triangular with positive
// diagonal and K(2,2) = 1, R in SO(3).
struct CameraPose {
  Eigen::Matrix3d K;
  Eigen::Matrix3d R;
  Eigen::Vector3d center;
  double scale = 1.0;
};

CameraPose decompose_camera(const Mat34& p);
Mat34 compose_camera(const Eigen::Matrix3d& K, const Eigen::Matrix3d& R, const Eigen::Vector3d& center);

// Line projection matrix: 2x2 minors of p. Rows use the row pairs
// (2,3), (1,3), (1,2) with the middle row negated; columns use the column
// pairs 12, 13, 14, 23, 24, 34 (1-based).
Mat36 exterior_square(const Mat34& p);
Eigen::MatrixXd line_projection_stack(const CameraStack& c);

// Plucker coordinates of the line through points a and b, in the column
// order of exterior_square: L_{uv} = a_u b_v - a_v b_u.
Eigen::Matrix<double, 6, 1> plucker_line(const Eigen::Vector4d& a, const Eigen::Vector4d& b);

enum class CameraLayout { generic, collinear };

struct SceneOptions {
  double distance = 6.0;         // scene offset from the origin the cameras look at
  double extent = 3.0;           // ball radius (generic) or half line length (collinear)
  double spacing_jitter = 0.25;  // collinear spacing jitter, fraction of the nominal step
  double max_perturb_deg = 10.0;
};

CameraStack generate_cameras(int n, CameraLayout layout, std::uint64_t seed, const SceneOptions& opts = {});

// Each camera P becomes P + (pct/100) * ||P||_F * G / ||G||_F with G iid normal.
CameraStack perturb_cameras(const CameraStack& c, double noise_pct, std::uint64_t seed);

struct CameraCorrespondence {
  Mat34 source;
  Mat34 target;
};

// source * H = scale_k * target for every correspondence k.
struct ProjectiveAlignment {
  Eigen::Matrix4d H = Eigen::Matrix4d::Identity();
  std::vector<double> scales;
  double residual = 0.0;  // smallest singular value of the normalized design matrix
  bool degenerate = false;
};

ProjectiveAlignment align_overlap(std::span<const CameraCorrespondence> pairs);
ProjectiveAlignment fit_frame_to_ground_truth(const CameraStack& est, const CameraStack& gt);

// Returns est_i * H / scale_i.
CameraStack apply_alignment(const CameraStack& est, const ProjectiveAlignment& a);
// Right-multiplies every camera by h.
CameraStack transform_frame(const CameraStack& c, const Eigen::Matrix4d& h);

struct PoseErrors {
  std::vector<double> rotation_deg;
  std::vector<double> location;
  double mean_rotation = 0, median_rotation = 0;
  double mean_location = 0, median_location = 0;
};

PoseErrors pose_errors(const CameraStack& est_aligned, const CameraStack& gt);
// fit_frame_to_ground_truth, apply_alignment, then pose_errors.
PoseErrors evaluate_against_ground_truth(const CameraStack& est, const CameraStack& gt);

double rotation_distance_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);
Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m);
Eigen::Matrix3d chordal_mean(std::span<const Eigen::Matrix3d> rotations);
Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle_rad);

// ||a - b|| divided by the mean distance of `reference` to its centroid.
double relative_location_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                  std::span<const Eigen::Vector3d> reference);

struct Similarity {
  double scale = 1.0;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
};

// Least-squares s, R, t with dst ~ s R src + t.
Similarity fit_similarity(std::span<const Eigen::Vector3d> src, std::span<const Eigen::Vector3d> dst);

}  // namespace qsync
