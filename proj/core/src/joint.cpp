#include "qsync/joint.hpp"

#include "qsync/cores.hpp"
#include "qsync/error.hpp"
#include "qsync/parallel.hpp"
#include "qsync/tensor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

namespace qsync {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Slices G_J[b, c] of the trifocal core.
const std::array<Eigen::Matrix4d, 6>& core_t_slices() {
  static const std::array<Eigen::Matrix4d, 6> s = [] {
    const DenseTensor g = core_t();
    std::array<Eigen::Matrix4d, 6> out;
    for (Index j = 0; j < 6; ++j)
      for (Index b = 0; b < 4; ++b)
        for (Index c = 0; c < 4; ++c) out[static_cast<std::size_t>(j)](b, c) = g({j, b, c});
    return out;
  }();
  return s;
}

// A_w = sum_J P_i(w, J) G_J for the three rows of one line projection block.
std::array<Eigen::Matrix4d, 3> contract_rows(const Eigen::MatrixXd& p, int cam) {
  const auto& g = core_t_slices();
  std::array<Eigen::Matrix4d, 3> a;
  for (int w = 0; w < 3; ++w) {
    a[static_cast<std::size_t>(w)].setZero();
    for (int j = 0; j < 6; ++j) a[static_cast<std::size_t>(w)] += p(3 * cam + w, j) * g[static_cast<std::size_t>(j)];
  }
  return a;
}

double weight_from_residual(double r, double delta, bool sqrt_residual) {
  return 1.0 / std::max(delta, sqrt_residual ? std::sqrt(r) : r);
}

void normalize_scales(std::vector<double>& lambda) {
  double s = 0;
  for (double v : lambda) s += v * v;
  if (s > 0) {
    const double inv = 1.0 / std::sqrt(s);
    for (double& v : lambda) v *= inv;
  }
}

}  // namespace

// ---------------------------------------------------------------- TriTerm

TriTerm::TriTerm(const BlockTensor3& t) : n_(t.n()) {
  std::map<Triple, int> ids;
  for (const Triple& tr : t.observed_tuples()) {
    const TriBlock b = t.get(tr);
    double nrm2 = 0;
    for (double v : b) nrm2 += v * v;
    if (nrm2 == 0.0) continue;
    ids[tr] = static_cast<int>(tuples_.size());
    tuples_.push_back(tr);
    blocks_.push_back(b);
    norm2_.push_back(nrm2);
  }
  partner_.assign(tuples_.size(), -1);
  for (std::size_t id = 0; id < tuples_.size(); ++id) {
    const Triple& tr = tuples_[id];
    const auto it = ids.find({tr[0], tr[2], tr[1]});
    partner_[id] = it == ids.end() ? -1 : it->second;
  }
  for (auto& g : groups_) g.assign(static_cast<std::size_t>(n_), {});
  for (std::size_t id = 0; id < tuples_.size(); ++id)
    for (int m = 0; m < 3; ++m)
      groups_[static_cast<std::size_t>(m)][static_cast<std::size_t>(tuples_[id][static_cast<std::size_t>(m)])].push_back(
          static_cast<int>(id));
  lambda_.assign(tuples_.size(), 0.0);
  weight_.assign(tuples_.size(), 1.0);
}

TriBlock TriTerm::model_block(std::size_t tuple, const Eigen::MatrixXd& p, const Eigen::MatrixXd& c2,
                              const Eigen::MatrixXd& c3) const {
  const Triple& tr = tuples_[tuple];
  const auto a = contract_rows(p, tr[0]);
  const Eigen::Matrix<double, 3, 4> cj = c2.block<3, 4>(3 * tr[1], 0);
  const Eigen::Matrix<double, 3, 4> ck = c3.block<3, 4>(3 * tr[2], 0);
  TriBlock out{};
  for (int w = 0; w < 3; ++w) {
    const Eigen::Matrix3d s = cj * a[static_cast<std::size_t>(w)] * ck.transpose();
    for (int q = 0; q < 3; ++q)
      for (int r = 0; r < 3; ++r) out[static_cast<std::size_t>(w + 3 * q + 9 * r)] = s(q, r);
  }
  return out;
}

void TriTerm::normals(int mode, const Eigen::MatrixXd& p, const Eigen::MatrixXd& c2, const Eigen::MatrixXd& c3,
                      double scale, std::vector<Eigen::MatrixXd>& M, std::vector<Eigen::MatrixXd>& R) const {
  if (mode < 0 || mode > 2) throw Error(ErrorCode::out_of_range, "trifocal mode must be 0..2");
  const int d = mode == 0 ? 6 : 4;
  M.assign(static_cast<std::size_t>(n_), Eigen::MatrixXd::Zero(d, d));
  R.assign(static_cast<std::size_t>(n_), Eigen::MatrixXd::Zero(3, d));
  const auto& g = core_t_slices();
  parallel_for(0, n_, [&](int cam) {
    Eigen::MatrixXd& m = M[static_cast<std::size_t>(cam)];
    Eigen::MatrixXd& r = R[static_cast<std::size_t>(cam)];
    Eigen::MatrixXd k(d, 9);
    Eigen::Matrix<double, 3, 9> x;
    for (int id : groups_[static_cast<std::size_t>(mode)][static_cast<std::size_t>(cam)]) {
      const auto uid = static_cast<std::size_t>(id);
      const Triple& tr = tuples_[uid];
      const TriBlock& blk = blocks_[uid];
      const Eigen::Matrix<double, 3, 4> cj = c2.block<3, 4>(3 * tr[1], 0);
      const Eigen::Matrix<double, 3, 4> ck = c3.block<3, 4>(3 * tr[2], 0);
      if (mode == 0) {
        // column (q, r): K(J, q + 3r) = (C_j G_J C_k^T)(q, r)
        for (int j = 0; j < 6; ++j) {
          const Eigen::Matrix3d s = cj * g[static_cast<std::size_t>(j)] * ck.transpose();
          for (int q = 0; q < 3; ++q)
            for (int rr = 0; rr < 3; ++rr) k(j, q + 3 * rr) = s(q, rr);
        }
        for (int w = 0; w < 3; ++w)
          for (int q = 0; q < 3; ++q)
            for (int rr = 0; rr < 3; ++rr) x(w, q + 3 * rr) = blk[static_cast<std::size_t>(w + 3 * q + 9 * rr)];
      } else {
        const auto a = contract_rows(p, tr[0]);
        for (int w = 0; w < 3; ++w) {
          // mode 1: K(b, w + 3r) = (A_w C_k^T)(b, r); mode 2: K(c, w + 3q) = (A_w^T C_j^T)(c, q)
          const Eigen::Matrix<double, 4, 3> s =
              mode == 1 ? Eigen::Matrix<double, 4, 3>(a[static_cast<std::size_t>(w)] * ck.transpose())
                        : Eigen::Matrix<double, 4, 3>(a[static_cast<std::size_t>(w)].transpose() * cj.transpose());
          for (int o = 0; o < 3; ++o) k.col(w + 3 * o) = s.col(o);
        }
        for (int w = 0; w < 3; ++w)
          for (int q = 0; q < 3; ++q)
            for (int rr = 0; rr < 3; ++rr) {
              const double v = blk[static_cast<std::size_t>(w + 3 * q + 9 * rr)];
              if (mode == 1)
                x(q, w + 3 * rr) = v;
              else
                x(rr, w + 3 * q) = v;
            }
      }
      const double w2 = scale * weight_[uid] * weight_[uid];
      m.noalias() += w2 * k * k.transpose();
      r.noalias() += (w2 * lambda_[uid]) * x * k.transpose();
    }
  });
}

std::vector<double> TriTerm::residual_norms(const Eigen::MatrixXd& p, const Eigen::MatrixXd& c2,
                                            const Eigen::MatrixXd& c3) const {
  std::vector<double> out(tuples_.size());
  parallel_for(0, static_cast<int>(tuples_.size()), [&](int id) {
    const auto uid = static_cast<std::size_t>(id);
    const TriBlock m = model_block(uid, p, c2, c3);
    double s = 0;
    for (std::size_t e = 0; e < 27; ++e) {
      const double d = lambda_[uid] * blocks_[uid][e] - m[e];
      s += d * d;
    }
    out[uid] = std::sqrt(s);
  });
  return out;
}

double TriTerm::objective(const Eigen::MatrixXd& p, const Eigen::MatrixXd& c2, const Eigen::MatrixXd& c3) const {
  const auto r = residual_norms(p, c2, c3);
  double s = 0;
  for (std::size_t id = 0; id < r.size(); ++id) s += weight_[id] * weight_[id] * r[id] * r[id];
  return s;
}

void TriTerm::update_scales(const Eigen::MatrixXd& p, const Eigen::MatrixXd& c2, const Eigen::MatrixXd& c3) {
  std::vector<double> raw(tuples_.size());
  parallel_for(0, static_cast<int>(tuples_.size()), [&](int id) {
    const auto uid = static_cast<std::size_t>(id);
    const TriBlock m = model_block(uid, p, c2, c3);
    double s = 0;
    for (std::size_t e = 0; e < 27; ++e) s += m[e] * blocks_[uid][e];
    raw[uid] = s / norm2_[uid];
  });
  for (std::size_t id = 0; id < tuples_.size(); ++id) {
    const int o = partner_[id];
    lambda_[id] = o < 0 ? raw[id] : 0.5 * (raw[id] + raw[static_cast<std::size_t>(o)]);
  }
  normalize_scales(lambda_);
}

void TriTerm::update_weights(const Eigen::MatrixXd& p, const Eigen::MatrixXd& c2, const Eigen::MatrixXd& c3,
                             double delta, bool sqrt_residual) {
  const auto r = residual_norms(p, c2, c3);
  for (std::size_t id = 0; id < r.size(); ++id) weight_[id] = weight_from_residual(r[id], delta, sqrt_residual);
}

Eigen::MatrixXd TriTerm::camera_init() const {
  const Index rows = 3 * n_;
  Eigen::MatrixXd flat = Eigen::MatrixXd::Zero(rows, 27 * static_cast<Index>(n_) * n_);
  for (std::size_t id = 0; id < tuples_.size(); ++id) {
    const Triple& tr = tuples_[id];
    for (int w = 0; w < 3; ++w)
      for (int q = 0; q < 3; ++q)
        for (int r = 0; r < 3; ++r) {
          const Index col = (3 * tr[0] + w) + rows * (3 * tr[2] + r);
          flat(3 * tr[1] + q, col) = blocks_[id][static_cast<std::size_t>(w + 3 * q + 9 * r)];
        }
  }
  return leading_left_singular_vectors(flat, 4);
}

// --------------------------------------------------------------- PairTerm

PairTerm::PairTerm(const BlockMatrix& e) : n_(e.n()) {
  std::map<Pair, int> ids;
  for (const Pair& pr : e.observed_tuples()) {
    const PairBlock b = e.get(pr);
    Eigen::Matrix3d m;
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) m(k, l) = b[static_cast<std::size_t>(k + 3 * l)];
    if (m.squaredNorm() == 0.0) continue;
    ids[pr] = static_cast<int>(tuples_.size());
    tuples_.push_back(pr);
    blocks_.push_back(m);
    norm2_.push_back(m.squaredNorm());
  }
  partner_.assign(tuples_.size(), -1);
  for (std::size_t id = 0; id < tuples_.size(); ++id) {
    const auto it = ids.find({tuples_[id][1], tuples_[id][0]});
    partner_[id] = it == ids.end() ? -1 : it->second;
  }
  for (auto& g : groups_) g.assign(static_cast<std::size_t>(n_), {});
  for (std::size_t id = 0; id < tuples_.size(); ++id)
    for (int m = 0; m < 2; ++m)
      groups_[static_cast<std::size_t>(m)][static_cast<std::size_t>(tuples_[id][static_cast<std::size_t>(m)])].push_back(
          static_cast<int>(id));
  lambda_.assign(tuples_.size(), 0.0);
  weight_.assign(tuples_.size(), 1.0);
}

Eigen::Matrix3d PairTerm::model_block(std::size_t tuple, const Eigen::MatrixXd& p2, const Eigen::MatrixXd& p3) const {
  const Pair& pr = tuples_[tuple];
  return p2.block<3, 6>(3 * pr[0], 0) * core_e() * p3.block<3, 6>(3 * pr[1], 0).transpose();
}

void PairTerm::normals(int mode, const Eigen::MatrixXd& p2, const Eigen::MatrixXd& p3, double scale,
                       std::vector<Eigen::MatrixXd>& M, std::vector<Eigen::MatrixXd>& R) const {
  if (mode < 0 || mode > 1) throw Error(ErrorCode::out_of_range, "essential mode must be 0..1");
  M.assign(static_cast<std::size_t>(n_), Eigen::MatrixXd::Zero(6, 6));
  R.assign(static_cast<std::size_t>(n_), Eigen::MatrixXd::Zero(3, 6));
  const Mat6 g = core_e();
  parallel_for(0, n_, [&](int cam) {
    for (int id : groups_[static_cast<std::size_t>(mode)][static_cast<std::size_t>(cam)]) {
      const auto uid = static_cast<std::size_t>(id);
      const Pair& pr = tuples_[uid];
      // mode 0: E = x K with K = G_E P3_j^T; mode 1: E^T = x K with K = G_E^T P2_i^T
      const Eigen::Matrix<double, 6, 3> k = mode == 0
                                                ? Eigen::Matrix<double, 6, 3>(g * p3.block<3, 6>(3 * pr[1], 0).transpose())
                                                : Eigen::Matrix<double, 6, 3>(g.transpose() * p2.block<3, 6>(3 * pr[0], 0).transpose());
      const Eigen::Matrix3d x = mode == 0 ? blocks_[uid] : Eigen::Matrix3d(blocks_[uid].transpose());
      const double w2 = scale * weight_[uid] * weight_[uid];
      M[static_cast<std::size_t>(cam)].noalias() += w2 * k * k.transpose();
      R[static_cast<std::size_t>(cam)].noalias() += (w2 * lambda_[uid]) * x * k.transpose();
    }
  });
}

std::vector<double> PairTerm::residual_norms(const Eigen::MatrixXd& p2, const Eigen::MatrixXd& p3) const {
  std::vector<double> out(tuples_.size());
  for (std::size_t id = 0; id < tuples_.size(); ++id)
    out[id] = (lambda_[id] * blocks_[id] - model_block(id, p2, p3)).norm();
  return out;
}

double PairTerm::objective(const Eigen::MatrixXd& p2, const Eigen::MatrixXd& p3) const {
  const auto r = residual_norms(p2, p3);
  double s = 0;
  for (std::size_t id = 0; id < r.size(); ++id) s += weight_[id] * weight_[id] * r[id] * r[id];
  return s;
}

void PairTerm::update_scales(const Eigen::MatrixXd& p2, const Eigen::MatrixXd& p3) {
  std::vector<double> raw(tuples_.size());
  for (std::size_t id = 0; id < tuples_.size(); ++id)
    raw[id] = model_block(id, p2, p3).cwiseProduct(blocks_[id]).sum() / norm2_[id];
  for (std::size_t id = 0; id < tuples_.size(); ++id) {
    const int o = partner_[id];
    lambda_[id] = o < 0 ? raw[id] : 0.5 * (raw[id] + raw[static_cast<std::size_t>(o)]);
  }
  normalize_scales(lambda_);
}

void PairTerm::update_weights(const Eigen::MatrixXd& p2, const Eigen::MatrixXd& p3, double delta,
                              bool sqrt_residual) {
  const auto r = residual_norms(p2, p3);
  for (std::size_t id = 0; id < r.size(); ++id) weight_[id] = weight_from_residual(r[id], delta, sqrt_residual);
}

// ------------------------------------------------------------ JointSolver

namespace {

BlockTensor4 normalized(BlockTensor4 q) {
  q.normalize();
  return q;
}

BlockTensor3 normalized(BlockTensor3 t) {
  t.normalize();
  return t;
}

BlockMatrix normalized(BlockMatrix e) {
  e.normalize();
  return e;
}

}  // namespace

JointSolver::JointSolver(BlockTensor4 q, const BlockTensor3& t, const BlockMatrix& e, JointConfig cfg)
    : cfg_(cfg), q_(normalized(std::move(q))), t_(normalized(t)), e_(normalized(e)), rho_(cfg.rho) {
  if (!(cfg_.rho > 0)) throw Error(ErrorCode::invalid_argument, "rho must be positive");
  if (!(cfg_.delta > 0)) throw Error(ErrorCode::invalid_argument, "delta must be positive");
  if (cfg_.irls_iters < 0 || cfg_.admm_iters < 0 || cfg_.alt_iters < 0)
    throw Error(ErrorCode::invalid_argument, "iteration counts must be nonnegative");
  nq_ = q_.tuple_count();
  nt_ = t_.tuple_count();
  ne_ = e_.tuple_count();
  if (nq_ == 0 && nt_ == 0)
    throw Error(ErrorCode::invalid_argument, "joint synchronization needs quadrifocal or trifocal blocks");
  const int n = nq_ > 0 ? q_.n() : t_.n();
  if ((nq_ > 0 && q_.n() != n) || (nt_ > 0 && t_.n() != n) || (ne_ > 0 && e_.n() != n))
    throw Error(ErrorCode::dimension_mismatch, "entities disagree on the camera count");
  initialize();
}

bool JointSolver::camera_active(int i) const {
  if (i < 0 || i > 5) throw Error(ErrorCode::out_of_range, "camera factor index must be 0..5");
  return i < 4 ? has_quad() : has_tri();
}

bool JointSolver::lineproj_active(int i) const {
  if (i < 0 || i > 2) throw Error(ErrorCode::out_of_range, "line projection factor index must be 0..2");
  return i == 0 ? has_tri() : has_ess();
}

Factors4 JointSolver::quad_factors() const { return {c_[0], c_[1], c_[2], c_[3]}; }

void JointSolver::initialize() {
  const Eigen::MatrixXd u = has_quad() ? hosvd_camera_init(q_) : t_.camera_init();
  const Eigen::MatrixXd l = line_projection_stack(CameraStack::from_stacked(u));
  for (auto& c : c_) c = u;
  for (auto& p : p_) p = l;
  b_ = u;
  d_ = l;
  for (auto& g : gamma_) g = Eigen::MatrixXd::Zero(u.rows(), 4);
  for (auto& t : tau_) t = Eigen::MatrixXd::Zero(u.rows(), 6);
  update_scales();
  update_weights();
}

void JointSolver::solve_rows(const std::vector<Eigen::MatrixXd>& M, const std::vector<Eigen::MatrixXd>& R,
                             const Eigen::MatrixXd& target, Eigen::MatrixXd& out, const char* what) const {
  const double h = rho_ / 2.0;
  const Index d = target.cols();
  Eigen::MatrixXd next(target.rows(), d);
  for (std::size_t a = 0; a < M.size(); ++a) {
    const Index r0 = 3 * static_cast<Index>(a);
    const Eigen::MatrixXd lhs = M[a] + h * Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd rhs = h * target.middleRows(r0, 3) + R[a];
    next.middleRows(r0, 3) = lhs.ldlt().solve(rhs.transpose()).transpose();
  }
  if (!next.allFinite()) throw DivergenceError(std::string("non-finite ") + what, diag_);
  out = next;
}

void JointSolver::update_camera(int i) {
  if (!camera_active(i)) return;
  const auto t0 = Clock::now();
  const auto ui = static_cast<std::size_t>(i);
  std::vector<Eigen::MatrixXd> M, R;
  if (i < 4) {
    const ModeNormals ne = q_.normals(i, quad_factors(), 1.0 / static_cast<double>(nq_));
    M.assign(ne.M.begin(), ne.M.end());
    R.assign(ne.R.begin(), ne.R.end());
  } else {
    t_.normals(i - 3, p_[0], c_[4], c_[5], 1.0 / static_cast<double>(nt_), M, R);
  }
  solve_rows(M, R, b_ - gamma_[ui], c_[ui], "camera factor");
  diag_.c_update_s += seconds_since(t0);
}

void JointSolver::update_lineproj(int i) {
  if (!lineproj_active(i)) return;
  const auto ui = static_cast<std::size_t>(i);
  std::vector<Eigen::MatrixXd> M, R;
  if (i == 0)
    t_.normals(0, p_[0], c_[4], c_[5], 1.0 / static_cast<double>(nt_), M, R);
  else
    e_.normals(i - 1, p_[1], p_[2], 1.0 / static_cast<double>(ne_), M, R);
  solve_rows(M, R, d_ - tau_[ui], p_[ui], "line projection factor");
}

void JointSolver::update_scales() {
  if (has_quad()) q_.update_scales(quad_factors());
  if (has_tri()) t_.update_scales(p_[0], c_[4], c_[5]);
  if (has_ess()) e_.update_scales(p_[1], p_[2]);
}

void JointSolver::update_weights() {
  if (has_quad()) q_.update_weights(quad_factors(), cfg_.delta, cfg_.sqrt_weights);
  if (has_tri()) t_.update_weights(p_[0], c_[4], c_[5], cfg_.delta, cfg_.sqrt_weights);
  if (has_ess()) e_.update_weights(p_[1], p_[2], cfg_.delta, cfg_.sqrt_weights);
}

void JointSolver::update_consensus() {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(b_.rows(), 4);
  int nc = 0;
  for (int i = 0; i < 6; ++i)
    if (camera_active(i)) {
      b += c_[static_cast<std::size_t>(i)] + gamma_[static_cast<std::size_t>(i)];
      ++nc;
    }
  b_ = b / nc;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(d_.rows(), 6);
  int np = 0;
  for (int i = 0; i < 3; ++i)
    if (lineproj_active(i)) {
      d += p_[static_cast<std::size_t>(i)] + tau_[static_cast<std::size_t>(i)];
      ++np;
    }
  if (np > 0) d_ = d / np;
}

void JointSolver::update_duals() {
  for (int i = 0; i < 6; ++i)
    if (camera_active(i)) gamma_[static_cast<std::size_t>(i)] += c_[static_cast<std::size_t>(i)] - b_;
  for (int i = 0; i < 3; ++i)
    if (lineproj_active(i)) tau_[static_cast<std::size_t>(i)] += p_[static_cast<std::size_t>(i)] - d_;
}

void JointSolver::alternate() {
  for (int i = 0; i < 6; ++i) update_camera(i);
  for (int i = 0; i < 3; ++i) update_lineproj(i);
  update_scales();
}

double JointSolver::quad_term() const {
  return has_quad() ? q_.objective(quad_factors()) / static_cast<double>(nq_) : 0.0;
}

double JointSolver::tri_term() const {
  return has_tri() ? t_.objective(p_[0], c_[4], c_[5]) / static_cast<double>(nt_) : 0.0;
}

double JointSolver::ess_term() const {
  return has_ess() ? e_.objective(p_[1], p_[2]) / static_cast<double>(ne_) : 0.0;
}

double JointSolver::penalty() const {
  double s = 0;
  for (int i = 0; i < 6; ++i)
    if (camera_active(i))
      s += (c_[static_cast<std::size_t>(i)] - b_ + gamma_[static_cast<std::size_t>(i)]).squaredNorm();
  for (int i = 0; i < 3; ++i)
    if (lineproj_active(i))
      s += (p_[static_cast<std::size_t>(i)] - d_ + tau_[static_cast<std::size_t>(i)]).squaredNorm();
  return rho_ / 2.0 * s;
}

double JointSolver::objective() const { return quad_term() + tri_term() + ess_term() + penalty(); }

CameraStack JointSolver::cameras() const {
  if (has_quad()) return CameraStack::from_stacked((c_[0] + c_[1] + c_[2] + c_[3]) / 4.0);
  return CameraStack::from_stacked((c_[4] + c_[5]) / 2.0);
}

void JointSolver::record(int irls, int admm, double obj, double wall) {
  const double bn = b_.norm();
  double gap = 0;
  for (int i = 0; i < 6; ++i)
    if (camera_active(i)) gap = std::max(gap, (c_[static_cast<std::size_t>(i)] - b_).norm());
  diag_.iterations.push_back({irls, admm, obj, bn > 0 ? gap / bn : gap, wall});
  diag_.term_values.push_back({quad_term(), tri_term(), ess_term()});
}

void JointSolver::run() {
  const auto t0 = Clock::now();
  diag_.iterations.clear();
  diag_.term_values.clear();
  diag_.term_names = {"quad", "tri", "ess"};
  double last = objective();
  bool stop = false;
  for (int it = 0; it < cfg_.irls_iters && !stop; ++it) {
    const auto c_snap = c_;
    const auto p_snap = p_;
    const auto g_snap = gamma_;
    const auto t_snap = tau_;
    const Eigen::MatrixXd b_snap = b_, d_snap = d_;
    const auto lq = q_.scales();
    const auto lt = t_.scales();
    const auto le = e_.scales();
    const std::size_t rec_snap = diag_.iterations.size();
    const double start = objective();
    for (int k = 0; k < cfg_.admm_iters; ++k) {
      for (int a = 0; a < cfg_.alt_iters; ++a) alternate();
      update_consensus();
      update_duals();
      const double obj = objective();
      if (!std::isfinite(obj))
        throw DivergenceError("objective is not finite at IRLS iteration " + std::to_string(it), diag_);
      record(it, k, obj, seconds_since(t0));
      if (cfg_.early_stop && std::abs(last - obj) <= cfg_.early_stop_tol * std::max(1.0, std::abs(last))) stop = true;
      last = obj;
      if (stop) break;
    }
    if (cfg_.divergence_guard && !diag_.rho_halved && last > 10.0 * start) {
      c_ = c_snap;
      p_ = p_snap;
      gamma_ = g_snap;
      tau_ = t_snap;
      b_ = b_snap;
      d_ = d_snap;
      q_.scales() = lq;
      t_.scales() = lt;
      e_.scales() = le;
      diag_.iterations.resize(rec_snap);
      diag_.term_values.resize(rec_snap);
      rho_ /= 2.0;
      diag_.rho_halved = true;
      last = start;
      stop = false;
      --it;
      continue;
    }
    update_weights();
  }
  diag_.final_rho = rho_;
  std::vector<double> res;
  if (has_quad()) res = q_.residual_norms(quad_factors());
  if (has_tri()) {
    const auto r = t_.residual_norms(p_[0], c_[4], c_[5]);
    res.insert(res.end(), r.begin(), r.end());
  }
  if (has_ess()) {
    const auto r = e_.residual_norms(p_[1], p_[2]);
    res.insert(res.end(), r.begin(), r.end());
  }
  diag_.residual_histogram = residual_histogram(res);
  diag_.total_s = seconds_since(t0);
}

SyncResult run_joint(const BlockTensor4& q, const BlockTensor3& t, const BlockMatrix& e, const JointConfig& cfg) {
  JointSolver s(q, t, e, cfg);
  s.run();
  return {s.cameras(), s.diagnostics()};
}

}  // namespace qsync
