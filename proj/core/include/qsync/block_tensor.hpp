#pragma once

// Sparse block containers with observation masks.
//
// BlockTensor4 keeps one canonical block per observed index multiset
// (indices sorted ascending). Any ordered tuple is served by permuting the
// canonical block's modes and applying the permutation sign, so the
// observation set is closed under index permutation by construction.
// The all-equal diagonal blocks are observed and identically zero.
//
// BlockTensor3 and BlockMatrix store every ordered tuple explicitly.

#include "qsync/geometry.hpp"
#include "qsync/multifocal.hpp"
#include "qsync/tensor.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace qsync {

using Quad = std::array<int, 4>;
using Triple = std::array<int, 3>;
using Pair = std::array<int, 2>;

// The 24 permutations of (0,1,2,3) in a fixed order, with parity and, for
// each, the gather map from a permuted block to its source block.
struct QuadPermutations {
  std::array<std::array<int, 4>, 24> perm{};
  std::array<int, 24> sign{};
  // gather[k][x] = y: entry x of the block at tuple (c[perm[k][0]], ..) is
  // sign[k] * canonical[y].
  std::array<std::array<int, 81>, 24> gather{};
  static const QuadPermutations& get();
};

class BlockTensor4 {
 public:
  explicit BlockTensor4(int n = 0);

  int n() const { return n_; }

  // Stores b as the block at tuple idx. The canonical block is derived by
  // permuting modes, so b must be antisymmetric in modes sharing a camera.
  void set(const Quad& idx, const QuadBlock& b);
  bool observed(const Quad& idx) const;
  // Zero when unobserved.
  QuadBlock get(const Quad& idx) const;

  std::size_t canonical_count() const { return index_.size(); }
  const Quad& canonical_index(std::size_t c) const { return index_[c]; }
  const QuadBlock& canonical_block(std::size_t c) const { return blocks_[c]; }
  // -1 when the multiset is unobserved. Tuples need not be sorted.
  int canonical_id(const Quad& idx) const;

  // Number of distinct ordered tuples of a canonical block.
  int orbit_size(std::size_t c) const;
  // Ordered observed tuples excluding the diagonal.
  std::size_t observed_count() const;

  // Scales every nonzero block to unit Frobenius norm.
  void normalize();
  DenseTensor to_dense() const;

  // Restriction to a camera subset, reindexed 0..k-1 in the given order.
  BlockTensor4 restrict_to(std::span<const int> cameras) const;

 private:
  static Quad sorted(const Quad& q);
  std::size_t slot(const Quad& sorted_idx) const;

  int n_ = 0;
  std::vector<int> slot_;  // n^4, indexed by the sorted tuple
  std::vector<Quad> index_;
  std::vector<QuadBlock> blocks_;
};

class BlockTensor3 {
 public:
  explicit BlockTensor3(int n = 0);
  int n() const { return n_; }
  void set(const Triple& idx, const TriBlock& b);
  bool observed(const Triple& idx) const;
  TriBlock get(const Triple& idx) const;
  // Observed tuples, excluding i = j = k, in lexicographic order.
  std::vector<Triple> observed_tuples() const;
  std::size_t observed_count() const;
  void normalize();
  DenseTensor to_dense() const;

 private:
  std::size_t slot(const Triple& idx) const;
  int n_ = 0;
  std::vector<unsigned char> mask_;
  std::vector<TriBlock> blocks_;
};

class BlockMatrix {
 public:
  explicit BlockMatrix(int n = 0);
  int n() const { return n_; }
  void set(const Pair& idx, const PairBlock& b);
  bool observed(const Pair& idx) const;
  PairBlock get(const Pair& idx) const;
  // Observed pairs, excluding i = j.
  std::vector<Pair> observed_tuples() const;
  std::size_t observed_count() const;
  void normalize();
  Eigen::MatrixXd to_dense() const;

 private:
  std::size_t slot(const Pair& idx) const;
  int n_ = 0;
  std::vector<unsigned char> mask_;
  std::vector<PairBlock> blocks_;
};

// Unordered camera sets; each entry is expanded to all orderings.
struct Observation {
  std::vector<Quad> quads;
  std::vector<Triple> triples;
  std::vector<Pair> pairs;
};

// All k-subsets of distinct cameras (k = 2, 3, 4).
Observation full_observation(int n);
// Uniform sample without replacement of round(pct/100 * C(n,4)) distinct
// quadruples, plus all triples and pairs.
std::vector<Quad> sample_quadruples(int n, double observed_pct, std::uint64_t seed);

BlockTensor4 build_block_tensor4(const CameraStack& c, std::span<const Quad> quads, bool normalize);
// Every ordering of each triple is filled.
BlockTensor3 build_block_tensor3(const CameraStack& c, std::span<const Triple> triples, bool normalize);
// Both orderings of each pair are filled.
BlockMatrix build_block_matrix(const CameraStack& c, std::span<const Pair> pairs, bool normalize);

// Each canonical quadruple is built from its own independently perturbed
// copy of the four cameras.
BlockTensor4 build_noisy_block_tensor4(const CameraStack& c, std::span<const Quad> quads, double noise_pct,
                                       std::uint64_t seed, bool normalize);
// Same for trifocal triples (all orderings share one perturbed copy) and
// essential pairs.
BlockTensor3 build_noisy_block_tensor3(const CameraStack& c, std::span<const Triple> triples, double noise_pct,
                                       std::uint64_t seed, bool normalize);
BlockMatrix build_noisy_block_matrix(const CameraStack& c, std::span<const Pair> pairs, double noise_pct,
                                     std::uint64_t seed, bool normalize);

}  // namespace qsync
