#pragma once

// Multifocal entities computed from cameras.
//
// Block layouts (first index fastest):
//   QuadBlock  entry (p,q,r,s) at p + 3q + 9r + 27s
//   TriBlock   entry (w,q,r)   at w + 3q + 9r
//   PairBlock  entry (k,l)     at k + 3l

#include "qsync/geometry.hpp"
#include "qsync/tensor.hpp"

#include <array>
#include <cstdint>

namespace qsync {

using QuadBlock = std::array<double, 81>;
using TriBlock = std::array<double, 27>;
using PairBlock = std::array<double, 9>;

// Q[p,q,r,s] = det[row p of a; row q of b; row r of c; row s of d].
QuadBlock quadrifocal_from_cameras(const Mat34& a, const Mat34& b, const Mat34& c, const Mat34& d);

// T[w,q,r] = (-1)^w det[a without row w; row q of b; row r of c] (w 0-based).
TriBlock trifocal_from_cameras(const Mat34& a, const Mat34& b, const Mat34& c);

// E[k,l] = (-1)^(k+l) det[a without row k; b without row l]; equals
// exterior_square(a) * core_e() * exterior_square(b)^T.
Eigen::Matrix3d essential_from_cameras(const Mat34& a, const Mat34& b);

// Dense (3n)^4, (3n)^3 and (3n)^2 block entities over all index tuples.
DenseTensor block_quadrifocal_dense(const CameraStack& c);
DenseTensor block_trifocal_dense(const CameraStack& c);
Eigen::MatrixXd block_essential_dense(const CameraStack& c);

double block_norm(const QuadBlock& b);
double block_norm(const TriBlock& b);
double block_norm(const PairBlock& b);

// Ranks of the matrices left after contracting all but two modes with
// generic vectors. For order 4 the entries follow the contracted mode pairs
// (0,1), (0,2), (0,3), (1,2), (1,3), (2,3); for order 3 entry k contracts
// mode k. Each entry is the majority rank over `trials` draws.
std::vector<int> projection_rank(const DenseTensor& t, int trials, std::uint64_t seed, double tol = 1e-8);

}  // namespace qsync
