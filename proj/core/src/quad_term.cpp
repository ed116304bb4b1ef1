#include "qsync/quad_term.hpp"

#include "qsync/error.hpp"
#include "qsync/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace qsync {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::array<int, 3> other_modes(int mode) {
  std::array<int, 3> o{};
  int k = 0;
  for (int m = 0; m < 4; ++m)
    if (m != mode) o[static_cast<std::size_t>(k++)] = m;
  return o;
}

// (-1)^b det of [u; v; w] without column b, for b = 0..3.
inline Eigen::Vector4d cross4(const double* L, const Eigen::RowVector4d& w) {
  // L = (01, 02, 03, 12, 13, 23)
  return Eigen::Vector4d(w(1) * L[5] - w(2) * L[4] + w(3) * L[3],
                         -(w(0) * L[5] - w(2) * L[2] + w(3) * L[1]),
                         w(0) * L[4] - w(1) * L[2] + w(3) * L[0],
                         -(w(0) * L[3] - w(1) * L[1] + w(2) * L[0]));
}

inline void two_form(const Eigen::RowVector4d& u, const Eigen::RowVector4d& v, double* L) {
  L[0] = u(0) * v(1) - u(1) * v(0);
  L[1] = u(0) * v(2) - u(2) * v(0);
  L[2] = u(0) * v(3) - u(3) * v(0);
  L[3] = u(1) * v(2) - u(2) * v(1);
  L[4] = u(1) * v(3) - u(3) * v(1);
  L[5] = u(2) * v(3) - u(3) * v(2);
}

// Floyd's sampling of m distinct values from [0, n).
std::vector<std::uint64_t> sample_distinct(std::uint64_t n, int m, std::uint64_t seed) {
  std::vector<std::uint64_t> out;
  if (m <= 0) return out;
  const auto mm = static_cast<std::uint64_t>(m);
  if (mm >= n) {
    out.resize(n);
    std::iota(out.begin(), out.end(), 0ULL);
    return out;
  }
  std::unordered_set<std::uint64_t> chosen;
  std::uint64_t state = seed;
  for (std::uint64_t j = n - mm; j < n; ++j) {
    state = splitmix(state);
    const std::uint64_t t = state % (j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  out.assign(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void contraction_matrix(int mode, const Mat34& a, const Mat34& b, const Mat34& c, Mat4x27& k) {
  const double sgn = mode % 2 ? -1.0 : 1.0;
  double L[6];
  for (int x1 = 0; x1 < 3; ++x1)
    for (int x0 = 0; x0 < 3; ++x0) {
      two_form(a.row(x0), b.row(x1), L);
      for (int x2 = 0; x2 < 3; ++x2) k.col(x0 + 3 * x1 + 9 * x2) = sgn * cross4(L, c.row(x2));
    }
}

QuadTerm::QuadTerm(BlockTensor4 data) : data_(std::move(data)) {
  const auto& qp = QuadPermutations::get();
  const int n = data_.n();
  for (auto& g : groups_) g.assign(static_cast<std::size_t>(n), {});
  lambda_.assign(data_.canonical_count(), 0.0);
  block_norm2_.assign(data_.canonical_count(), 0.0);
  for (std::size_t c = 0; c < data_.canonical_count(); ++c) {
    const Quad& s = data_.canonical_index(c);
    double nrm2 = 0;
    for (double v : data_.canonical_block(c)) nrm2 += v * v;
    block_norm2_[c] = nrm2;
    if (s[0] == s[3] || nrm2 == 0.0) continue;
    std::vector<Quad> seen;
    for (int k = 0; k < 24; ++k) {
      const auto& p = qp.perm[static_cast<std::size_t>(k)];
      const Quad t{s[static_cast<std::size_t>(p[0])], s[static_cast<std::size_t>(p[1])], s[static_cast<std::size_t>(p[2])],
                   s[static_cast<std::size_t>(p[3])]};
      if (std::find(seen.begin(), seen.end(), t) != seen.end()) continue;
      seen.push_back(t);
      const int id = static_cast<int>(tuples_.size());
      tuples_.push_back({t, static_cast<int>(c), k});
      for (int m = 0; m < 4; ++m) groups_[static_cast<std::size_t>(m)][static_cast<std::size_t>(t[static_cast<std::size_t>(m)])].push_back(id);
    }
  }
  weight_.assign(tuples_.size(), 1.0);
  flat_.resize(24);
  for (int k = 0; k < 24; ++k)
    for (int mode = 0; mode < 4; ++mode) {
      const auto o = other_modes(mode);
      for (int x = 0; x < 81; ++x) {
        const int xs[4] = {x % 3, (x / 3) % 3, (x / 9) % 3, x / 27};
        const int row = xs[mode];
        const int col = xs[o[0]] + 3 * xs[o[1]] + 9 * xs[o[2]];
        flat_[static_cast<std::size_t>(k)][static_cast<std::size_t>(mode)][static_cast<std::size_t>(row * 27 + col)] =
            qp.gather[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)];
      }
    }
}

const std::vector<int>& QuadTerm::group(int mode, int camera) const {
  return groups_.at(static_cast<std::size_t>(mode)).at(static_cast<std::size_t>(camera));
}

void QuadTerm::flattened_block(std::size_t tuple, int mode, Mat3x27& out) const {
  const auto& et = tuples_[tuple];
  const auto& src = data_.canonical_block(static_cast<std::size_t>(et.canon));
  const double sign = QuadPermutations::get().sign[static_cast<std::size_t>(et.perm)];
  const auto& map = flat_[static_cast<std::size_t>(et.perm)][static_cast<std::size_t>(mode)];
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 27; ++c) out(r, c) = sign * src[static_cast<std::size_t>(map[static_cast<std::size_t>(r * 27 + c)])];
}

void QuadTerm::block(std::size_t tuple, QuadBlock& out) const { out = data_.get(tuples_[tuple].t); }

Mat3x27 QuadTerm::model_block(std::size_t tuple, const Factors4& f) const {
  const Quad& t = tuples_[tuple].t;
  Mat4x27 k;
  contraction_matrix(0, f[1].block<3, 4>(3 * t[1], 0), f[2].block<3, 4>(3 * t[2], 0), f[3].block<3, 4>(3 * t[3], 0), k);
  return f[0].block<3, 4>(3 * t[0], 0) * k;
}

ModeNormals QuadTerm::normals(int mode, const Factors4& f, double scale) const {
  const int n = data_.n();
  ModeNormals out;
  out.M.assign(static_cast<std::size_t>(n), Eigen::Matrix4d::Zero());
  out.R.assign(static_cast<std::size_t>(n), Eigen::Matrix<double, 3, 4>::Zero());
  const auto o = other_modes(mode);
  parallel_for(0, n, [&](int a) {
    Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
    Eigen::Matrix<double, 3, 4> R = Eigen::Matrix<double, 3, 4>::Zero();
    Mat4x27 k;
    Mat3x27 x;
    for (int id : group(mode, a)) {
      const auto& t = tuples_[static_cast<std::size_t>(id)].t;
      contraction_matrix(mode, f[static_cast<std::size_t>(o[0])].block<3, 4>(3 * t[static_cast<std::size_t>(o[0])], 0),
                         f[static_cast<std::size_t>(o[1])].block<3, 4>(3 * t[static_cast<std::size_t>(o[1])], 0),
                         f[static_cast<std::size_t>(o[2])].block<3, 4>(3 * t[static_cast<std::size_t>(o[2])], 0), k);
      flattened_block(static_cast<std::size_t>(id), mode, x);
      const double w = weight_[static_cast<std::size_t>(id)];
      const double w2 = scale * w * w;
      if (w2 == 0.0) continue;
      M.noalias() += w2 * (k * k.transpose());
      R.noalias() += (w2 * scale_of(static_cast<std::size_t>(id))) * (x * k.transpose());
    }
    out.M[static_cast<std::size_t>(a)] = M;
    out.R[static_cast<std::size_t>(a)] = R;
  });
  return out;
}

int QuadTerm::tuple_id(const Quad& t) const {
  const int n = data_.n();
  return lookup_[static_cast<std::size_t>(t[0] + n * (t[1] + n * (t[2] + n * t[3])))];
}

RowNormals QuadTerm::sampled_normals(int mode, const Factors4& f, double scale, int m, std::uint64_t seed,
                                     std::uint64_t counter) const {
  const int n = data_.n();
  if (lookup_.empty()) {
    lookup_.assign(static_cast<std::size_t>(n) * n * n * n, -1);
    for (std::size_t id = 0; id < tuples_.size(); ++id) {
      const auto& t = tuples_[id].t;
      lookup_[static_cast<std::size_t>(t[0] + n * (t[1] + n * (t[2] + n * t[3])))] = static_cast<int>(id);
    }
  }
  RowNormals out;
  out.M.assign(static_cast<std::size_t>(n), {Eigen::Matrix4d::Zero(), Eigen::Matrix4d::Zero(), Eigen::Matrix4d::Zero()});
  out.R.assign(static_cast<std::size_t>(n), Eigen::Matrix<double, 3, 4>::Zero());
  const auto o = other_modes(mode);
  const std::uint64_t dim = 3ULL * static_cast<std::uint64_t>(n);
  const std::uint64_t columns = dim * dim * dim;
  const double sgn = mode % 2 ? -1.0 : 1.0;
  const auto& qp = QuadPermutations::get();
  parallel_for(0, n, [&](int a) {
    for (int p = 0; p < 3; ++p) {
      const std::uint64_t row_seed =
          splitmix(splitmix(splitmix(seed) ^ counter) ^ (static_cast<std::uint64_t>(mode) << 32 | static_cast<std::uint64_t>(3 * a + p)));
      Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
      Eigen::RowVector4d R = Eigen::RowVector4d::Zero();
      for (std::uint64_t col : sample_distinct(columns, m, row_seed)) {
        const auto g0 = static_cast<int>(col % dim), g1 = static_cast<int>((col / dim) % dim), g2 = static_cast<int>(col / (dim * dim));
        Quad t{};
        t[static_cast<std::size_t>(mode)] = a;
        t[static_cast<std::size_t>(o[0])] = g0 / 3;
        t[static_cast<std::size_t>(o[1])] = g1 / 3;
        t[static_cast<std::size_t>(o[2])] = g2 / 3;
        const int id = tuple_id(t);
        if (id < 0) continue;
        const double w = weight_[static_cast<std::size_t>(id)];
        const double w2 = scale * w * w;
        if (w2 == 0.0) continue;
        double L[6];
        two_form(f[static_cast<std::size_t>(o[0])].row(g0), f[static_cast<std::size_t>(o[1])].row(g1), L);
        const Eigen::Vector4d kc = sgn * cross4(L, f[static_cast<std::size_t>(o[2])].row(g2));
        const auto& et = tuples_[static_cast<std::size_t>(id)];
        const int local = g0 % 3 + 3 * (g1 % 3) + 9 * (g2 % 3);
        const double xval = qp.sign[static_cast<std::size_t>(et.perm)] *
                            data_.canonical_block(static_cast<std::size_t>(et.canon))[static_cast<std::size_t>(
                                flat_[static_cast<std::size_t>(et.perm)][static_cast<std::size_t>(mode)][static_cast<std::size_t>(p * 27 + local)])];
        M.noalias() += w2 * (kc * kc.transpose());
        R.noalias() += (w2 * scale_of(static_cast<std::size_t>(id)) * xval) * kc.transpose();
      }
      out.M[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)] = M;
      out.R[static_cast<std::size_t>(a)].row(p) = R;
    }
  });
  return out;
}

std::vector<double> QuadTerm::residual_norms(const Factors4& f) const {
  std::vector<double> r(tuples_.size(), 0.0);
  const int chunks = std::max(1, std::min<int>(static_cast<int>(tuples_.size()), 64 * thread_count()));
  const std::size_t per = (tuples_.size() + static_cast<std::size_t>(chunks) - 1) / static_cast<std::size_t>(chunks);
  parallel_for(0, chunks, [&](int c) {
    Mat3x27 x;
    const std::size_t lo = static_cast<std::size_t>(c) * per, hi = std::min(tuples_.size(), lo + per);
    for (std::size_t id = lo; id < hi; ++id) {
      flattened_block(id, 0, x);
      r[id] = (scale_of(id) * x - model_block(id, f)).norm();
    }
  });
  return r;
}

double QuadTerm::objective(const Factors4& f) const {
  const std::vector<double> r = residual_norms(f);
  double s = 0;
  for (std::size_t id = 0; id < r.size(); ++id) s += weight_[id] * weight_[id] * r[id] * r[id];
  return s;
}

void QuadTerm::update_scales(const Factors4& f) {
  std::vector<double> num(lambda_.size(), 0.0);
  std::vector<int> count(lambda_.size(), 0);
  // tuples of one canonical block are contiguous
  std::vector<std::size_t> starts;
  for (std::size_t id = 0; id < tuples_.size(); ++id)
    if (id == 0 || tuples_[id].canon != tuples_[id - 1].canon) starts.push_back(id);
  starts.push_back(tuples_.size());
  parallel_for(0, static_cast<int>(starts.size()) - 1, [&](int g) {
    Mat3x27 x;
    for (std::size_t id = starts[static_cast<std::size_t>(g)]; id < starts[static_cast<std::size_t>(g) + 1]; ++id) {
      const auto c = static_cast<std::size_t>(tuples_[id].canon);
      flattened_block(id, 0, x);
      num[c] += (x.cwiseProduct(model_block(id, f))).sum() / block_norm2_[c];
      ++count[c];
    }
  });
  double norm2 = 0;
  for (std::size_t c = 0; c < lambda_.size(); ++c) {
    lambda_[c] = count[c] ? num[c] / count[c] : 0.0;
    norm2 += count[c] * lambda_[c] * lambda_[c];
  }
  const double nrm = std::sqrt(norm2);
  if (nrm > 0)
    for (double& l : lambda_) l /= nrm;
}

double QuadTerm::scale_norm() const {
  double s = 0;
  for (const auto& et : tuples_) s += lambda_[static_cast<std::size_t>(et.canon)] * lambda_[static_cast<std::size_t>(et.canon)];
  return std::sqrt(s);
}

void QuadTerm::update_weights(const Factors4& f, double delta, bool sqrt_residual) {
  const std::vector<double> r = residual_norms(f);
  for (std::size_t id = 0; id < r.size(); ++id) {
    const double m = std::max(delta, sqrt_residual ? std::sqrt(r[id]) : r[id]);
    weight_[id] = 1.0 / m;
  }
}

void QuadTerm::set_uniform_weights(double w) { std::fill(weight_.begin(), weight_.end(), w); }

Eigen::MatrixXd QuadTerm::mode0_gram() const {
  const int n = data_.n();
  std::vector<int> order(tuples_.size());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](int id) {
    const auto& t = tuples_[static_cast<std::size_t>(id)].t;
    return static_cast<long>(t[1]) + static_cast<long>(n) * (t[2] + static_cast<long>(n) * t[3]);
  };
  std::sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b) || (key(a) == key(b) && a < b); });
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  std::vector<Mat3x27> xs;
  std::vector<int> cams;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    xs.clear();
    cams.clear();
    while (j < order.size() && key(order[j]) == key(order[i])) {
      Mat3x27 x;
      flattened_block(static_cast<std::size_t>(order[j]), 0, x);
      xs.push_back(x);
      cams.push_back(tuples_[static_cast<std::size_t>(order[j])].t[0]);
      ++j;
    }
    for (std::size_t u = 0; u < xs.size(); ++u)
      for (std::size_t v = 0; v < xs.size(); ++v) g.block<3, 3>(3 * cams[u], 3 * cams[v]) += xs[u] * xs[v].transpose();
    i = j;
  }
  return g;
}

}  // namespace qsync
