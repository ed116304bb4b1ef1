#include "qsync/block_tensor.hpp"

#include "qsync/cores.hpp"
#include "qsync/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace qsync {

namespace {

std::size_t binom(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void check_index(int v, int n) {
  if (v < 0 || v >= n) throw Error(ErrorCode::out_of_range, "block index " + std::to_string(v) + " outside [0, " + std::to_string(n) + ")");
}

template <class B>
double norm_of(const B& b) {
  double s = 0;
  for (double v : b) s += v * v;
  return std::sqrt(s);
}

template <class B>
void scale_to_unit(B& b) {
  const double s = norm_of(b);
  if (s > 0)
    for (double& v : b) v /= s;
}

// Permutation k with tuple[m] = sorted[perm[m]], chosen stably.
int find_permutation(const Quad& tuple, Quad& sorted_out) {
  std::array<int, 4> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return tuple[static_cast<std::size_t>(a)] < tuple[static_cast<std::size_t>(b)]; });
  std::array<int, 4> perm{};
  for (int r = 0; r < 4; ++r) {
    sorted_out[static_cast<std::size_t>(r)] = tuple[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
    perm[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;
  }
  const auto& qp = QuadPermutations::get();
  for (int k = 0; k < 24; ++k)
    if (qp.perm[static_cast<std::size_t>(k)] == perm) return k;
  return -1;
}

}  // namespace

const QuadPermutations& QuadPermutations::get() {
  static const QuadPermutations table = [] {
    QuadPermutations t;
    std::array<int, 4> p{0, 1, 2, 3};
    int k = 0;
    do {
      const auto ks = static_cast<std::size_t>(k);
      t.perm[ks] = p;
      t.sign[ks] = permutation_parity(p);
      for (int x = 0; x < 81; ++x) {
        const int xs[4] = {x % 3, (x / 3) % 3, (x / 9) % 3, x / 27};
        int ys[4];
        for (int m = 0; m < 4; ++m) ys[p[static_cast<std::size_t>(m)]] = xs[m];
        t.gather[ks][static_cast<std::size_t>(x)] = ys[0] + 3 * ys[1] + 9 * ys[2] + 27 * ys[3];
      }
      ++k;
    } while (std::next_permutation(p.begin(), p.end()));
    return t;
  }();
  return table;
}

// ---------------------------------------------------------------- order 4

BlockTensor4::BlockTensor4(int n) : n_(n) {
  if (n < 0) throw Error(ErrorCode::invalid_argument, "negative camera count");
  slot_.assign(binom(static_cast<std::size_t>(n) + 3, 4), -1);
}

Quad BlockTensor4::sorted(const Quad& q) {
  Quad s = q;
  std::sort(s.begin(), s.end());
  return s;
}

std::size_t BlockTensor4::slot(const Quad& s) const {
  // combinatorial number system on the strictly increasing (a, b+1, c+2, d+3)
  return binom(static_cast<std::size_t>(s[0]), 1) + binom(static_cast<std::size_t>(s[1] + 1), 2) +
         binom(static_cast<std::size_t>(s[2] + 2), 3) + binom(static_cast<std::size_t>(s[3] + 3), 4);
}

int BlockTensor4::canonical_id(const Quad& idx) const {
  for (int v : idx) check_index(v, n_);
  return slot_[slot(sorted(idx))];
}

void BlockTensor4::set(const Quad& idx, const QuadBlock& b) {
  for (int v : idx) check_index(v, n_);
  Quad s{};
  const int k = find_permutation(idx, s);
  const auto& qp = QuadPermutations::get();
  QuadBlock canon{};
  const double sign = qp.sign[static_cast<std::size_t>(k)];
  for (int x = 0; x < 81; ++x)
    canon[static_cast<std::size_t>(qp.gather[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)])] = sign * b[static_cast<std::size_t>(x)];
  if (s[0] == s[3]) canon.fill(0.0);
  int& id = slot_[slot(s)];
  if (id < 0) {
    id = static_cast<int>(index_.size());
    index_.push_back(s);
    blocks_.push_back(canon);
  } else {
    blocks_[static_cast<std::size_t>(id)] = canon;
  }
}

bool BlockTensor4::observed(const Quad& idx) const {
  for (int v : idx) check_index(v, n_);
  if (idx[0] == idx[1] && idx[1] == idx[2] && idx[2] == idx[3]) return true;
  return slot_[slot(sorted(idx))] >= 0;
}

QuadBlock BlockTensor4::get(const Quad& idx) const {
  for (int v : idx) check_index(v, n_);
  Quad s{};
  const int k = find_permutation(idx, s);
  const int id = slot_[slot(s)];
  QuadBlock out{};
  if (id < 0) return out;
  const auto& qp = QuadPermutations::get();
  const auto& src = blocks_[static_cast<std::size_t>(id)];
  const double sign = qp.sign[static_cast<std::size_t>(k)];
  for (int x = 0; x < 81; ++x)
    out[static_cast<std::size_t>(x)] = sign * src[static_cast<std::size_t>(qp.gather[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)])];
  return out;
}

int BlockTensor4::orbit_size(std::size_t c) const {
  const Quad& q = index_[c];
  int size = 24;
  // divide by the factorials of run lengths
  int run = 1;
  for (int i = 1; i <= 4; ++i) {
    if (i < 4 && q[static_cast<std::size_t>(i)] == q[static_cast<std::size_t>(i - 1)]) {
      ++run;
    } else {
      for (int f = 2; f <= run; ++f) size /= f;
      run = 1;
    }
  }
  return size;
}

std::size_t BlockTensor4::observed_count() const {
  std::size_t total = 0;
  for (std::size_t c = 0; c < index_.size(); ++c)
    if (index_[c][0] != index_[c][3]) total += static_cast<std::size_t>(orbit_size(c));
  return total;
}

void BlockTensor4::normalize() {
  for (auto& b : blocks_) scale_to_unit(b);
}

DenseTensor BlockTensor4::to_dense() const {
  const Index m = 3 * n_;
  DenseTensor t({m, m, m, m});
  auto data = t.data();
  const auto& qp = QuadPermutations::get();
  for (std::size_t c = 0; c < index_.size(); ++c) {
    const Quad& s = index_[c];
    std::set<Quad> seen;
    for (int k = 0; k < 24; ++k) {
      const auto& p = qp.perm[static_cast<std::size_t>(k)];
      const Quad tup{s[static_cast<std::size_t>(p[0])], s[static_cast<std::size_t>(p[1])], s[static_cast<std::size_t>(p[2])],
                     s[static_cast<std::size_t>(p[3])]};
      if (!seen.insert(tup).second) continue;
      const QuadBlock b = get(tup);
      for (int x = 0; x < 81; ++x) {
        const int xs[4] = {x % 3, (x / 3) % 3, (x / 9) % 3, x / 27};
        const Index lin = (3 * tup[0] + xs[0]) + m * ((3 * tup[1] + xs[1]) + m * ((3 * tup[2] + xs[2]) + m * (3 * tup[3] + xs[3])));
        data[static_cast<std::size_t>(lin)] = b[static_cast<std::size_t>(x)];
      }
    }
  }
  return t;
}

BlockTensor4 BlockTensor4::restrict_to(std::span<const int> cameras) const {
  std::vector<int> local(static_cast<std::size_t>(n_), -1);
  for (std::size_t k = 0; k < cameras.size(); ++k) {
    check_index(cameras[k], n_);
    if (local[static_cast<std::size_t>(cameras[k])] >= 0) throw Error(ErrorCode::invalid_argument, "duplicate camera in subset");
    local[static_cast<std::size_t>(cameras[k])] = static_cast<int>(k);
  }
  BlockTensor4 out(static_cast<int>(cameras.size()));
  for (std::size_t c = 0; c < index_.size(); ++c) {
    Quad q{};
    bool inside = true;
    for (int m = 0; m < 4; ++m) {
      q[static_cast<std::size_t>(m)] = local[static_cast<std::size_t>(index_[c][static_cast<std::size_t>(m)])];
      inside = inside && q[static_cast<std::size_t>(m)] >= 0;
    }
    if (inside) out.set(q, blocks_[c]);
  }
  return out;
}

// ---------------------------------------------------------------- order 3

BlockTensor3::BlockTensor3(int n) : n_(n) {
  if (n < 0) throw Error(ErrorCode::invalid_argument, "negative camera count");
  const auto size = static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  mask_.assign(size, 0);
  blocks_.assign(size, TriBlock{});
}

std::size_t BlockTensor3::slot(const Triple& idx) const {
  for (int v : idx) check_index(v, n_);
  return static_cast<std::size_t>(idx[0] + n_ * (idx[1] + n_ * idx[2]));
}

void BlockTensor3::set(const Triple& idx, const TriBlock& b) {
  const auto s = slot(idx);
  mask_[s] = 1;
  blocks_[s] = b;
}

bool BlockTensor3::observed(const Triple& idx) const { return mask_[slot(idx)] != 0; }

TriBlock BlockTensor3::get(const Triple& idx) const {
  const auto s = slot(idx);
  return mask_[s] ? blocks_[s] : TriBlock{};
}

std::vector<Triple> BlockTensor3::observed_tuples() const {
  std::vector<Triple> out;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k)
        if (!(i == j && j == k) && observed({i, j, k})) out.push_back({i, j, k});
  return out;
}

std::size_t BlockTensor3::observed_count() const { return observed_tuples().size(); }

void BlockTensor3::normalize() {
  for (std::size_t s = 0; s < blocks_.size(); ++s)
    if (mask_[s]) scale_to_unit(blocks_[s]);
}

DenseTensor BlockTensor3::to_dense() const {
  const Index m = 3 * n_;
  DenseTensor t({m, m, m});
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) {
        const TriBlock b = get({i, j, k});
        for (int x = 0; x < 27; ++x)
          t({3 * i + x % 3, 3 * j + (x / 3) % 3, 3 * k + x / 9}) = b[static_cast<std::size_t>(x)];
      }
  return t;
}

// ---------------------------------------------------------------- order 2

BlockMatrix::BlockMatrix(int n) : n_(n) {
  if (n < 0) throw Error(ErrorCode::invalid_argument, "negative camera count");
  const auto size = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  mask_.assign(size, 0);
  blocks_.assign(size, PairBlock{});
}

std::size_t BlockMatrix::slot(const Pair& idx) const {
  for (int v : idx) check_index(v, n_);
  return static_cast<std::size_t>(idx[0] + n_ * idx[1]);
}

void BlockMatrix::set(const Pair& idx, const PairBlock& b) {
  const auto s = slot(idx);
  mask_[s] = 1;
  blocks_[s] = b;
}

bool BlockMatrix::observed(const Pair& idx) const { return mask_[slot(idx)] != 0; }

PairBlock BlockMatrix::get(const Pair& idx) const {
  const auto s = slot(idx);
  return mask_[s] ? blocks_[s] : PairBlock{};
}

std::vector<Pair> BlockMatrix::observed_tuples() const {
  std::vector<Pair> out;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      if (i != j && observed({i, j})) out.push_back({i, j});
  return out;
}

std::size_t BlockMatrix::observed_count() const { return observed_tuples().size(); }

void BlockMatrix::normalize() {
  for (std::size_t s = 0; s < blocks_.size(); ++s)
    if (mask_[s]) scale_to_unit(blocks_[s]);
}

Eigen::MatrixXd BlockMatrix::to_dense() const {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(3 * n_, 3 * n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      const PairBlock b = get({i, j});
      for (int x = 0; x < 9; ++x) e(3 * i + x % 3, 3 * j + x / 3) = b[static_cast<std::size_t>(x)];
    }
  return e;
}

// ---------------------------------------------------------------- builders

Observation full_observation(int n) {
  Observation o;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      o.pairs.push_back({i, j});
      for (int k = j + 1; k < n; ++k) {
        o.triples.push_back({i, j, k});
        for (int l = k + 1; l < n; ++l) o.quads.push_back({i, j, k, l});
      }
    }
  return o;
}

std::vector<Quad> sample_quadruples(int n, double observed_pct, std::uint64_t seed) {
  if (!(observed_pct > 0 && observed_pct <= 100))
    throw Error(ErrorCode::invalid_argument, "observed percentage must lie in (0, 100]");
  std::vector<Quad> all = full_observation(n).quads;
  const auto keep = static_cast<std::size_t>(std::llround(observed_pct / 100.0 * static_cast<double>(all.size())));
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(keep);
  std::sort(all.begin(), all.end());
  return all;
}

BlockTensor4 build_block_tensor4(const CameraStack& c, std::span<const Quad> quads, bool normalize) {
  BlockTensor4 t(c.size());
  const auto& P = c.cameras;
  for (const Quad& q : quads) {
    for (int v : q) check_index(v, c.size());
    t.set(q, quadrifocal_from_cameras(P[static_cast<std::size_t>(q[0])], P[static_cast<std::size_t>(q[1])],
                                      P[static_cast<std::size_t>(q[2])], P[static_cast<std::size_t>(q[3])]));
  }
  if (normalize) t.normalize();
  return t;
}

BlockTensor4 build_noisy_block_tensor4(const CameraStack& c, std::span<const Quad> quads, double noise_pct,
                                       std::uint64_t seed, bool normalize) {
  BlockTensor4 t(c.size());
  std::mt19937_64 seeder(seed);
  for (const Quad& q : quads) {
    for (int v : q) check_index(v, c.size());
    const CameraStack local = perturb_cameras(c.subset(q), noise_pct, seeder());
    const auto& P = local.cameras;
    t.set(q, quadrifocal_from_cameras(P[0], P[1], P[2], P[3]));
  }
  if (normalize) t.normalize();
  return t;
}

BlockTensor3 build_block_tensor3(const CameraStack& c, std::span<const Triple> triples, bool normalize) {
  BlockTensor3 t(c.size());
  const auto& P = c.cameras;
  for (const Triple& tr : triples) {
    std::array<int, 3> p{tr[0], tr[1], tr[2]};
    std::sort(p.begin(), p.end());
    do {
      t.set({p[0], p[1], p[2]}, trifocal_from_cameras(P[static_cast<std::size_t>(p[0])], P[static_cast<std::size_t>(p[1])],
                                                      P[static_cast<std::size_t>(p[2])]));
    } while (std::next_permutation(p.begin(), p.end()));
  }
  if (normalize) t.normalize();
  return t;
}

BlockMatrix build_block_matrix(const CameraStack& c, std::span<const Pair> pairs, bool normalize) {
  BlockMatrix e(c.size());
  const auto& P = c.cameras;
  for (const Pair& pr : pairs) {
    for (int v : pr) check_index(v, c.size());
    const Eigen::Matrix3d m = essential_from_cameras(P[static_cast<std::size_t>(pr[0])], P[static_cast<std::size_t>(pr[1])]);
    PairBlock b{}, bt{};
    for (int x = 0; x < 9; ++x) {
      b[static_cast<std::size_t>(x)] = m(x % 3, x / 3);
      bt[static_cast<std::size_t>(x)] = m(x / 3, x % 3);
    }
    e.set(pr, b);
    e.set({pr[1], pr[0]}, bt);
  }
  if (normalize) e.normalize();
  return e;
}

BlockTensor3 build_noisy_block_tensor3(const CameraStack& c, std::span<const Triple> triples, double noise_pct,
                                       std::uint64_t seed, bool normalize) {
  BlockTensor3 t(c.size());
  std::mt19937_64 seeder(seed);
  for (const Triple& tr : triples) {
    for (int v : tr) check_index(v, c.size());
    const CameraStack local = perturb_cameras(c.subset(tr), noise_pct, seeder());
    std::array<int, 3> p{0, 1, 2};
    do {
      const auto& P = local.cameras;
      t.set({tr[static_cast<std::size_t>(p[0])], tr[static_cast<std::size_t>(p[1])], tr[static_cast<std::size_t>(p[2])]},
            trifocal_from_cameras(P[static_cast<std::size_t>(p[0])], P[static_cast<std::size_t>(p[1])],
                                  P[static_cast<std::size_t>(p[2])]));
    } while (std::next_permutation(p.begin(), p.end()));
  }
  if (normalize) t.normalize();
  return t;
}

BlockMatrix build_noisy_block_matrix(const CameraStack& c, std::span<const Pair> pairs, double noise_pct,
                                     std::uint64_t seed, bool normalize) {
  BlockMatrix e(c.size());
  std::mt19937_64 seeder(seed);
  for (const Pair& pr : pairs) {
    for (int v : pr) check_index(v, c.size());
    const CameraStack local = perturb_cameras(c.subset(pr), noise_pct, seeder());
    const BlockMatrix one = build_block_matrix(local, std::array<Pair, 1>{Pair{0, 1}}, false);
    e.set(pr, one.get({0, 1}));
    e.set({pr[1], pr[0]}, one.get({1, 0}));
  }
  if (normalize) e.normalize();
  return e;
}

}  // namespace qsync
