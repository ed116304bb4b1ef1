#pragma once

// Dense multilinear algebra for tensors of order 2 to 4.
//
// Layout: the first index is the fastest. For dims (M_0, ..., M_{N-1}) the
// element (i_0, ..., i_{N-1}) lives at i_0 + M_0 * (i_1 + M_1 * (i_2 + ...)).
// Mode flattenings inherit this ordering: row k of flatten(t, m) holds the
// slice i_m = k, and its columns enumerate the remaining indices with the
// lowest remaining mode fastest. With this convention
//   flatten(G x_0 U_0 ... x_{N-1} U_{N-1}, 0) = U_0 G_(0) (U_{N-1} (x) ... (x) U_1)^T.
// Modes are 0-based throughout the library.

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace qsync {

using Index = Eigen::Index;

class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(std::vector<Index> dims);
  DenseTensor(std::vector<Index> dims, std::vector<double> data);

  static DenseTensor random_normal(std::vector<Index> dims, std::mt19937_64& rng);

  int order() const { return static_cast<int>(dims_.size()); }
  const std::vector<Index>& dims() const { return dims_; }
  Index dim(int mode) const { return dims_.at(static_cast<std::size_t>(mode)); }
  Index size() const { return static_cast<Index>(data_.size()); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Index linear_index(std::span<const Index> idx) const;
  double operator()(std::initializer_list<Index> idx) const;
  double& operator()(std::initializer_list<Index> idx);
  double operator[](Index linear) const { return data_[static_cast<std::size_t>(linear)]; }
  double& operator[](Index linear) { return data_[static_cast<std::size_t>(linear)]; }

  double norm() const;

  DenseTensor& operator+=(const DenseTensor& other);
  DenseTensor& operator-=(const DenseTensor& other);
  DenseTensor& operator*=(double s);

 private:
  std::vector<Index> dims_;
  std::vector<double> data_;
};

DenseTensor operator+(DenseTensor a, const DenseTensor& b);
DenseTensor operator-(DenseTensor a, const DenseTensor& b);
DenseTensor operator*(double s, DenseTensor a);

Eigen::MatrixXd flatten(const DenseTensor& t, int mode);
DenseTensor unflatten(const Eigen::MatrixXd& m, int mode, std::vector<Index> dims);

// t x_mode u: replaces dims[mode] by u.rows().
DenseTensor mode_product(const DenseTensor& t, const Eigen::MatrixXd& u, int mode);

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Kronecker product of all factors except `skip`, in descending mode order:
// F_{N-1} (x) ... (x) F_{skip+1} (x) F_{skip-1} (x) ... (x) F_0.
Eigen::MatrixXd kron_except(std::span<const Eigen::MatrixXd> factors, int skip);

struct TuckerFactorization {
  DenseTensor core;
  std::vector<Eigen::MatrixXd> factors;
  bool degenerate = false;  // input was identically zero

  DenseTensor reconstruct() const;
};

TuckerFactorization tucker_reconstructable(DenseTensor core, std::vector<Eigen::MatrixXd> factors);

// Truncated HOSVD. Factor i holds the target_ranks[i] leading left singular
// vectors of flatten(t, i), sign-normalized so the largest-magnitude entry of
// each vector is positive.
TuckerFactorization hosvd(const DenseTensor& t, std::span<const int> target_ranks);

struct MlRank {
  std::vector<int> ranks;
  std::vector<double> singular_gaps;  // sigma_{r+1} / sigma_r per mode, 0 when r is full
  std::vector<Eigen::VectorXd> singular_values;
};

MlRank mlrank_estimate(const DenseTensor& t, double tol = 1e-8);

// Leading r left singular vectors. Uses the Gram matrix when the long side
// exceeds ten times the short side, a thin SVD otherwise.
Eigen::MatrixXd leading_left_singular_vectors(const Eigen::MatrixXd& m, int r);

// Leading r eigenvectors of a symmetric positive semidefinite matrix, with
// the same sign normalization as hosvd.
Eigen::MatrixXd leading_eigenvectors(const Eigen::MatrixXd& gram, int r);

// Singular values in descending order, computed through a QR
// preconditioning step so tiny singular values keep full relative accuracy
// on very wide or very tall matrices.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& m);

int numerical_rank(const Eigen::MatrixXd& m, double tol = 1e-8);

}  // namespace qsync
