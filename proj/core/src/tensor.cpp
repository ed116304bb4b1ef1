#include "qsync/tensor.hpp"

#include "qsync/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace qsync {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::out_of_range: return "out_of_range";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
  }
  return "unknown";
}

namespace {

Index product(const std::vector<Index>& dims) {
  Index p = 1;
  for (Index d : dims) p *= d;
  return p;
}

void check_dims(const std::vector<Index>& dims) {
  if (dims.size() < 2 || dims.size() > 4)
    throw Error(ErrorCode::invalid_argument, "tensor order must be 2, 3 or 4");
  for (Index d : dims)
    if (d <= 0) throw Error(ErrorCode::invalid_argument, "tensor extents must be positive");
}

void check_mode(const DenseTensor& t, int mode) {
  if (mode < 0 || mode >= t.order())
    throw Error(ErrorCode::out_of_range, "mode " + std::to_string(mode) + " out of range for order " +
                                             std::to_string(t.order()));
}

void fix_signs(Eigen::MatrixXd& u) {
  for (Index c = 0; c < u.cols(); ++c) {
    Index arg = 0;
    u.col(c).cwiseAbs().maxCoeff(&arg);
    if (u(arg, c) < 0) u.col(c) = -u.col(c);
  }
}

}  // namespace

DenseTensor::DenseTensor(std::vector<Index> dims) : dims_(std::move(dims)) {
  check_dims(dims_);
  data_.assign(static_cast<std::size_t>(product(dims_)), 0.0);
}

DenseTensor::DenseTensor(std::vector<Index> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  check_dims(dims_);
  if (static_cast<Index>(data_.size()) != product(dims_))
    throw Error(ErrorCode::dimension_mismatch, "data size does not match dims");
}

DenseTensor DenseTensor::random_normal(std::vector<Index> dims, std::mt19937_64& rng) {
  DenseTensor t(std::move(dims));
  std::normal_distribution<double> g;
  for (double& v : t.data_) v = g(rng);
  return t;
}

Index DenseTensor::linear_index(std::span<const Index> idx) const {
  if (idx.size() != dims_.size())
    throw Error(ErrorCode::dimension_mismatch, "index arity does not match tensor order");
  Index lin = 0;
  for (std::size_t k = idx.size(); k-- > 0;) {
    if (idx[k] < 0 || idx[k] >= dims_[k]) throw Error(ErrorCode::out_of_range, "tensor index out of range");
    lin = lin * dims_[k] + idx[k];
  }
  return lin;
}

double DenseTensor::operator()(std::initializer_list<Index> idx) const {
  return data_[static_cast<std::size_t>(linear_index(std::span<const Index>(idx.begin(), idx.size())))];
}

double& DenseTensor::operator()(std::initializer_list<Index> idx) {
  return data_[static_cast<std::size_t>(linear_index(std::span<const Index>(idx.begin(), idx.size())))];
}

double DenseTensor::norm() const {
  double s = 0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) {
  if (dims_ != other.dims_) throw Error(ErrorCode::dimension_mismatch, "tensor dims differ");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& other) {
  if (dims_ != other.dims_) throw Error(ErrorCode::dimension_mismatch, "tensor dims differ");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

DenseTensor& DenseTensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
DenseTensor operator*(double s, DenseTensor a) { return a *= s; }

Eigen::MatrixXd flatten(const DenseTensor& t, int mode) {
  check_mode(t, mode);
  const auto& dims = t.dims();
  const Index rows = dims[static_cast<std::size_t>(mode)];
  const Index cols = t.size() / rows;
  Eigen::MatrixXd m(rows, cols);
  // inner: modes below `mode`, outer: modes above. Column = inner + inner_size * outer.
  Index inner = 1;
  for (int k = 0; k < mode; ++k) inner *= dims[static_cast<std::size_t>(k)];
  const Index outer = cols / inner;
  auto data = t.data();
  for (Index o = 0; o < outer; ++o)
    for (Index r = 0; r < rows; ++r)
      for (Index i = 0; i < inner; ++i)
        m(r, i + inner * o) = data[static_cast<std::size_t>(i + inner * (r + rows * o))];
  return m;
}

DenseTensor unflatten(const Eigen::MatrixXd& m, int mode, std::vector<Index> dims) {
  DenseTensor t(std::move(dims));
  check_mode(t, mode);
  const auto& d = t.dims();
  const Index rows = d[static_cast<std::size_t>(mode)];
  if (m.rows() != rows || m.cols() != t.size() / rows)
    throw Error(ErrorCode::dimension_mismatch, "matrix shape does not match flattening of dims");
  Index inner = 1;
  for (int k = 0; k < mode; ++k) inner *= d[static_cast<std::size_t>(k)];
  const Index outer = m.cols() / inner;
  auto data = t.data();
  for (Index o = 0; o < outer; ++o)
    for (Index r = 0; r < rows; ++r)
      for (Index i = 0; i < inner; ++i)
        data[static_cast<std::size_t>(i + inner * (r + rows * o))] = m(r, i + inner * o);
  return t;
}

DenseTensor mode_product(const DenseTensor& t, const Eigen::MatrixXd& u, int mode) {
  check_mode(t, mode);
  if (u.cols() != t.dim(mode))
    throw Error(ErrorCode::dimension_mismatch, "mode_product: u.cols() != dims[mode]");
  std::vector<Index> dims = t.dims();
  dims[static_cast<std::size_t>(mode)] = u.rows();
  return unflatten(u * flatten(t, mode), mode, std::move(dims));
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

Eigen::MatrixXd kron_except(std::span<const Eigen::MatrixXd> factors, int skip) {
  const int n = static_cast<int>(factors.size());
  if (skip < 0 || skip >= n) throw Error(ErrorCode::out_of_range, "kron_except: skip out of range");
  Eigen::MatrixXd acc;
  bool first = true;
  for (int k = n - 1; k >= 0; --k) {
    if (k == skip) continue;
    if (first) {
      acc = factors[static_cast<std::size_t>(k)];
      first = false;
    } else {
      acc = kron(acc, factors[static_cast<std::size_t>(k)]);
    }
  }
  if (first) return Eigen::MatrixXd::Identity(1, 1);
  return acc;
}

DenseTensor TuckerFactorization::reconstruct() const {
  DenseTensor t = core;
  for (std::size_t k = 0; k < factors.size(); ++k) t = mode_product(t, factors[k], static_cast<int>(k));
  return t;
}

TuckerFactorization tucker_reconstructable(DenseTensor core, std::vector<Eigen::MatrixXd> factors) {
  if (static_cast<int>(factors.size()) != core.order())
    throw Error(ErrorCode::dimension_mismatch, "one factor per mode required");
  for (std::size_t k = 0; k < factors.size(); ++k)
    if (factors[k].cols() != core.dim(static_cast<int>(k)))
      throw Error(ErrorCode::dimension_mismatch, "factor column count must match core extent");
  TuckerFactorization f;
  f.core = std::move(core);
  f.factors = std::move(factors);
  return f;
}

Eigen::MatrixXd leading_eigenvectors(const Eigen::MatrixXd& gram, int r) {
  if (r < 0 || r > gram.rows()) throw Error(ErrorCode::invalid_argument, "requested rank exceeds dimension");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::degenerate, "eigendecomposition failed");
  // eigenvalues ascending
  Eigen::MatrixXd u = es.eigenvectors().rightCols(r).rowwise().reverse();
  fix_signs(u);
  return u;
}

Eigen::MatrixXd leading_left_singular_vectors(const Eigen::MatrixXd& m, int r) {
  if (r < 0 || r > m.rows()) throw Error(ErrorCode::invalid_argument, "requested rank exceeds row count");
  const Index lo = std::min(m.rows(), m.cols());
  const Index hi = std::max(m.rows(), m.cols());
  if (hi > 10 * lo && m.cols() > m.rows()) return leading_eigenvectors(m * m.transpose(), r);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  Eigen::MatrixXd u(m.rows(), r);
  const Index avail = svd.matrixU().cols();
  const Index take = std::min<Index>(r, avail);
  u.leftCols(take) = svd.matrixU().leftCols(take);
  if (take < r) {
    // complete with an orthonormal basis of the complement
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(u.leftCols(take));
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.rows());
    u.rightCols(r - take) = q.block(0, take, m.rows(), r - take);
  }
  fix_signs(u);
  return u;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return Eigen::VectorXd();
  // QR of the tall orientation, then Jacobi SVD of the small triangular factor.
  const Eigen::MatrixXd a = m.cols() > m.rows() ? Eigen::MatrixXd(m.transpose()) : m;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Index k = a.cols();
  Eigen::MatrixXd rmat = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rmat);
  return svd.singularValues();
}

int numerical_rank(const Eigen::MatrixXd& m, double tol) {
  const Eigen::VectorXd s = singular_values(m);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Index k = 0; k < s.size(); ++k)
    if (s(k) >= tol * s(0)) ++r;
  return r;
}

TuckerFactorization hosvd(const DenseTensor& t, std::span<const int> target_ranks) {
  if (static_cast<int>(target_ranks.size()) != t.order())
    throw Error(ErrorCode::dimension_mismatch, "one target rank per mode required");
  TuckerFactorization f;
  for (int k = 0; k < t.order(); ++k) {
    const int r = target_ranks[static_cast<std::size_t>(k)];
    if (r < 0 || r > t.dim(k)) throw Error(ErrorCode::invalid_argument, "target rank exceeds mode extent");
  }
  if (t.norm() == 0.0) {
    f.degenerate = true;
    std::vector<Index> cdims;
    for (int k = 0; k < t.order(); ++k) {
      cdims.push_back(std::max(1, target_ranks[static_cast<std::size_t>(k)]));
      f.factors.push_back(Eigen::MatrixXd::Zero(t.dim(k), cdims.back()));
    }
    f.core = DenseTensor(cdims);
    return f;
  }
  for (int k = 0; k < t.order(); ++k)
    f.factors.push_back(leading_left_singular_vectors(flatten(t, k), target_ranks[static_cast<std::size_t>(k)]));
  DenseTensor core = t;
  for (int k = 0; k < t.order(); ++k)
    core = mode_product(core, f.factors[static_cast<std::size_t>(k)].transpose(), k);
  f.core = std::move(core);
  return f;
}

MlRank mlrank_estimate(const DenseTensor& t, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw Error(ErrorCode::invalid_argument, "tol must lie in (0,1)");
  MlRank out;
  for (int k = 0; k < t.order(); ++k) {
    Eigen::VectorXd s = singular_values(flatten(t, k));
    int r = 0;
    if (s.size() > 0 && s(0) > 0.0)
      for (Index i = 0; i < s.size(); ++i)
        if (s(i) >= tol * s(0)) ++r;
    out.ranks.push_back(r);
    double gap = 0.0;
    if (r > 0 && r < s.size()) gap = s(r) / s(r - 1);
    out.singular_gaps.push_back(gap);
    out.singular_values.push_back(std::move(s));
  }
  return out;
}

}  // namespace qsync
