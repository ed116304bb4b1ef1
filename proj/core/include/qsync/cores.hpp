#pragma once

// Constant Tucker cores of the block quadrifocal tensor, block trifocal
// tensor and block essential matrix.
//
// Line coordinates use the column pairs 12, 13, 14, 23, 24, 34 (1-based) of
// exterior_square.

#include "qsync/tensor.hpp"

#include <array>
#include <cstdint>

namespace qsync {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// Sign of the permutation (a,b,c,d) of (0,1,2,3); 0 when an index repeats.
int levi_civita(int a, int b, int c, int d);
int permutation_parity(const std::array<int, 4>& p);

// 4x4x4x4 Levi-Civita tensor.
DenseTensor core_q();

// 6x4x4 with G_T[J, b, c] = s(J) * ([(b,c) = J'] - [(c,b) = J']), J' the
// complementary column pair of J and s(J) the Laplace sign of J.
DenseTensor core_t();

// 6x6, G_E[J, J'] = s(J).
Mat6 core_e();

// Laplace sign of column pair j (0..5): +1 for 12, 14, 23, 34 and -1 for 13, 24.
int laplace_sign(int pair);
// Index of the complementary column pair: 5 - pair.
inline int complement_pair(int pair) { return 5 - pair; }
// 0-based columns of pair j.
std::array<int, 2> column_pair(int pair);

// G_T x_0 y^T, a 4x4 antisymmetric matrix.
Eigen::Matrix4d contract_core_t_first(const Vec6& y);
// G_T x_2 v^T, a 6x4 matrix.
Eigen::Matrix<double, 6, 4> contract_core_t_last(const Eigen::Vector4d& v);

struct DerivedTrifocalCore {
  DenseTensor core;             // rounded to {-1, 0, 1}
  double fit_residual = 0;      // relative residual of the least-squares fit
  double max_rounding = 0;      // largest |entry - round(entry)| before rounding
  double verify_residual = 0;   // worst relative residual on fresh instances
};

// Least-squares fit of the 96 core entries from one random block trifocal
// tensor with exact factors, rounded and verified on fresh instances.
// Throws when rounding moves an entry by more than 0.01.
DerivedTrifocalCore derive_trifocal_core(std::uint64_t seed, int fresh_instances = 5);

}  // namespace qsync
