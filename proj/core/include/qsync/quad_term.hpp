#pragma once

// Weighted data term of the block quadrifocal tensor,
//
//   sum_t w_t^2 || lambda_t X_t - G_Q x_1 F0_{t0} x_2 F1_{t1} x_3 F2_{t2} x_4 F3_{t3} ||^2,
//
// over ordered observed tuples t (diagonal excluded), with one factor
// matrix F_m (3n x 4) per mode. The scales lambda live on canonical blocks
// and are therefore symmetric; the weights live on ordered tuples.

#include "qsync/block_tensor.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace qsync {

using Factors4 = std::array<Eigen::MatrixXd, 4>;
using Mat4x27 = Eigen::Matrix<double, 4, 27>;
using Mat3x27 = Eigen::Matrix<double, 3, 27>;

struct ExpandedTuple {
  Quad t{};
  int canon = 0;
  int perm = 0;
};

// Per camera normal equations of one mode update: rows x of the camera
// block minimize sum w^2 ||lambda X - x K||^2, giving M = sum w^2 K K^T and
// R = sum w^2 lambda X_(m) K^T.
struct ModeNormals {
  std::vector<Eigen::Matrix4d> M;
  std::vector<Eigen::Matrix<double, 3, 4>> R;
};

// Row-wise variant used by column subsampling: M and R per (camera, row).
struct RowNormals {
  std::vector<std::array<Eigen::Matrix4d, 3>> M;
  std::vector<Eigen::Matrix<double, 3, 4>> R;
};

// K for mode m: K(b, x_o0 + 3 x_o1 + 9 x_o2) = (-1)^m det[e_b; A_x0; B_x1; C_x2],
// where A, B, C are the camera blocks of the other modes in ascending order.
void contraction_matrix(int mode, const Mat34& a, const Mat34& b, const Mat34& c, Mat4x27& k);

class QuadTerm {
 public:
  explicit QuadTerm(BlockTensor4 data);

  int n() const { return data_.n(); }
  const BlockTensor4& data() const { return data_; }
  std::size_t tuple_count() const { return tuples_.size(); }
  const std::vector<ExpandedTuple>& tuples() const { return tuples_; }
  // Tuple ids with t[mode] == camera.
  const std::vector<int>& group(int mode, int camera) const;

  // X_t flattened along `mode`: 3 x 27, columns ordered by the remaining
  // modes with the lowest fastest.
  void flattened_block(std::size_t tuple, int mode, Mat3x27& out) const;
  void block(std::size_t tuple, QuadBlock& out) const;

  // Model block for tuple t, flattened along mode 0.
  Mat3x27 model_block(std::size_t tuple, const Factors4& f) const;

  // Normal equations for all cameras of one mode, each term scaled by `scale`.
  ModeNormals normals(int mode, const Factors4& f, double scale) const;
  // Sampled version: per (camera, row), m columns of the full mode
  // flattening drawn uniformly without replacement. Unobserved columns
  // carry zero weight.
  RowNormals sampled_normals(int mode, const Factors4& f, double scale, int m, std::uint64_t seed,
                             std::uint64_t counter) const;

  std::vector<double> residual_norms(const Factors4& f) const;
  // sum_t w_t^2 ||lambda X_t - model_t||^2
  double objective(const Factors4& f) const;

  // Per-block projection, symmetrize over the orbit, normalize to ||Lambda||_F = 1.
  void update_scales(const Factors4& f);
  // w = 1 / max(delta, sqrt(r)) (or 1 / max(delta, r) without the root).
  void update_weights(const Factors4& f, double delta, bool sqrt_residual);
  void set_uniform_weights(double w);

  // Gram matrix of the mode-0 flattening of the observed tensor (3n x 3n).
  Eigen::MatrixXd mode0_gram() const;

  std::vector<double>& scales() { return lambda_; }
  const std::vector<double>& scales() const { return lambda_; }
  std::vector<double>& weights() { return weight_; }
  const std::vector<double>& weights() const { return weight_; }
  double scale_of(std::size_t tuple) const { return lambda_[static_cast<std::size_t>(tuples_[tuple].canon)]; }
  // Frobenius norm of Lambda as an n^4 tensor.
  double scale_norm() const;

 private:
  int tuple_id(const Quad& t) const;

  BlockTensor4 data_;
  std::vector<ExpandedTuple> tuples_;
  std::array<std::vector<std::vector<int>>, 4> groups_;
  std::vector<double> lambda_;  // per canonical block
  std::vector<double> weight_;  // per tuple
  std::vector<double> block_norm2_;  // per canonical block
  // flat_[perm][mode][row * 27 + col] -> canonical entry
  std::vector<std::array<std::array<int, 81>, 4>> flat_;
  mutable std::vector<int> lookup_;  // n^4 -> tuple id, built on first sampled use
};

}  // namespace qsync
