#pragma once

// Independent helpers for the unit tests: random instances and reference
// computations written directly from the definitions.

#include "qsync/geometry.hpp"
#include "qsync/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace qsync::test {

inline Mat34 random_camera(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat34 p;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) p(r, c) = g(rng);
  return p;
}

inline CameraStack random_cameras(int n, std::mt19937_64& rng) {
  CameraStack s;
  for (int i = 0; i < n; ++i) s.cameras.push_back(random_camera(rng));
  return s;
}

inline Eigen::Matrix4d random_frame(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Matrix4d h;
  do {
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) h(r, c) = g(rng);
  } while (std::abs(h.determinant()) < 0.1);
  return h;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  return q.normalized().toRotationMatrix();
}

inline Eigen::Vector4d random_point(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return {g(rng), g(rng), g(rng), 1.0};
}

// Some line through image point x: x cross a random point.
inline Eigen::Vector3d line_through(const Eigen::Vector3d& x, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return x.cross(Eigen::Vector3d(g(rng), g(rng), g(rng))).normalized();
}

// Mode product by explicit index loops, any order up to 4.
inline DenseTensor loop_mode_product(const DenseTensor& t, const Eigen::MatrixXd& u, int mode) {
  std::vector<Index> dims = t.dims();
  dims[static_cast<std::size_t>(mode)] = u.rows();
  while (dims.size() < 4) dims.push_back(1);
  std::vector<Index> src = t.dims();
  while (src.size() < 4) src.push_back(1);
  DenseTensor out(std::vector<Index>(dims.begin(), dims.begin() + t.order()));
  for (Index a = 0; a < dims[0]; ++a)
    for (Index b = 0; b < dims[1]; ++b)
      for (Index c = 0; c < dims[2]; ++c)
        for (Index d = 0; d < dims[3]; ++d) {
          Index idx[4] = {a, b, c, d};
          const Index row = idx[mode];
          double s = 0;
          for (Index k = 0; k < src[static_cast<std::size_t>(mode)]; ++k) {
            idx[mode] = k;
            const Index lin = idx[0] + src[0] * (idx[1] + src[1] * (idx[2] + src[2] * idx[3]));
            s += u(row, k) * t[lin];
          }
          out[a + dims[0] * (b + dims[1] * (c + dims[2] * d))] = s;
        }
  return out;
}

inline Eigen::MatrixXd orthonormal(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

// Largest principal angle (sine) between the column spaces of a and b.
inline double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd qa = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXd qb = Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() * Eigen::MatrixXd::Identity(b.rows(), b.cols());
  return (qb - qa * (qa.transpose() * qb)).norm();
}

// Central-difference gradient of f with respect to the entries of x.
template <class F>
Eigen::MatrixXd numeric_gradient(Eigen::MatrixXd x, F&& f, double h = 1e-5) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r)
    for (Index c = 0; c < x.cols(); ++c) {
      const double v = x(r, c);
      x(r, c) = v + h;
      const double fp = f(x);
      x(r, c) = v - h;
      const double fm = f(x);
      x(r, c) = v;
      g(r, c) = (fp - fm) / (2 * h);
    }
  return g;
}

}  // namespace qsync::test
