#include "qsync/quadsync.hpp"

#include "qsync/error.hpp"
#include "qsync/tensor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace qsync {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::vector<int> residual_histogram(const std::vector<double>& residuals) {
  std::vector<int> h(17, 0);
  for (double r : residuals) {
    int bin = 0;
    if (r > 0) bin = static_cast<int>(std::floor(std::log10(r))) + 16;
    bin = std::clamp(bin, 0, 16);
    ++h[static_cast<std::size_t>(bin)];
  }
  return h;
}

void write_diagnostics_csv(std::ostream& os, const SolverDiagnostics& d) {
  os << "iteration,irls,admm,objective,consensus_gap,wall_s";
  for (const auto& name : d.term_names) os << ',' << name;
  os << '\n';
  char buf[64];
  for (std::size_t k = 0; k < d.iterations.size(); ++k) {
    const auto& it = d.iterations[k];
    os << k << ',' << it.irls << ',' << it.admm;
    for (double v : {it.objective, it.consensus_gap, it.wall_s}) {
      std::snprintf(buf, sizeof buf, ",%.10g", v);
      os << buf;
    }
    if (k < d.term_values.size())
      for (double v : d.term_values[k]) {
        std::snprintf(buf, sizeof buf, ",%.10g", v);
        os << buf;
      }
    os << '\n';
  }
}

Eigen::MatrixXd hosvd_camera_init(const QuadTerm& term) {
  if (term.tuple_count() == 0) throw Error(ErrorCode::invalid_argument, "observation set is empty");
  return leading_eigenvectors(term.mode0_gram(), 4);
}

QuadSyncSolver::QuadSyncSolver(BlockTensor4 q, QuadSyncConfig cfg)
    : cfg_(cfg), term_(std::move(q)), rho_(cfg.rho) {
  if (!(cfg_.rho > 0)) throw Error(ErrorCode::invalid_argument, "rho must be positive");
  if (!(cfg_.delta > 0)) throw Error(ErrorCode::invalid_argument, "delta must be positive");
  if (cfg_.irls_iters < 0 || cfg_.admm_iters < 0 || cfg_.alt_iters < 0)
    throw Error(ErrorCode::invalid_argument, "iteration counts must be nonnegative");
  if (cfg_.subsample_m < 0) throw Error(ErrorCode::invalid_argument, "subsample size must be nonnegative");
  initialize();
}

void QuadSyncSolver::initialize() {
  const Eigen::MatrixXd u = hosvd_camera_init(term_);
  for (auto& c : c_) c = u;
  b_ = u;
  for (auto& g : gamma_) g = Eigen::MatrixXd::Zero(u.rows(), 4);
  term_.update_scales(c_);
  term_.update_weights(c_, cfg_.delta, cfg_.sqrt_weights);
}

void QuadSyncSolver::update_camera_factor(int mode) {
  if (mode < 0 || mode > 3) throw Error(ErrorCode::out_of_range, "mode must be 0..3");
  const auto t0 = Clock::now();
  const auto ms = static_cast<std::size_t>(mode);
  const Eigen::MatrixXd target = b_ - gamma_[ms];
  Eigen::MatrixXd next(target.rows(), 4);
  const int n = term_.n();
  const double h = rho_ / 2.0;
  if (cfg_.subsample_m > 0) {
    const RowNormals ne = term_.sampled_normals(mode, c_, 1.0, cfg_.subsample_m, cfg_.seed, update_counter_++);
    for (int a = 0; a < n; ++a)
      for (int p = 0; p < 3; ++p) {
        const Eigen::Matrix4d lhs = ne.M[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)] + h * Eigen::Matrix4d::Identity();
        const Eigen::RowVector4d rhs = h * target.row(3 * a + p) + ne.R[static_cast<std::size_t>(a)].row(p);
        next.row(3 * a + p) = lhs.ldlt().solve(rhs.transpose()).transpose();
      }
  } else {
    const ModeNormals ne = term_.normals(mode, c_, 1.0);
    for (int a = 0; a < n; ++a) {
      const Eigen::Matrix4d lhs = ne.M[static_cast<std::size_t>(a)] + h * Eigen::Matrix4d::Identity();
      const Eigen::Matrix<double, 3, 4> rhs = h * target.block<3, 4>(3 * a, 0) + ne.R[static_cast<std::size_t>(a)];
      next.block<3, 4>(3 * a, 0) = lhs.ldlt().solve(rhs.transpose()).transpose();
    }
  }
  if (!next.allFinite()) throw DivergenceError("non-finite camera factor in mode " + std::to_string(mode), diag_);
  c_[ms] = next;
  diag_.c_update_s += seconds_since(t0);
}

void QuadSyncSolver::solve_scales() { term_.update_scales(c_); }

void QuadSyncSolver::update_consensus() {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(b_.rows(), 4);
  for (std::size_t i = 0; i < 4; ++i) b += c_[i] + gamma_[i];
  b_ = b / 4.0;
}

void QuadSyncSolver::update_duals() {
  for (std::size_t i = 0; i < 4; ++i) gamma_[i] += c_[i] - b_;
}

void QuadSyncSolver::update_weights() { term_.update_weights(c_, cfg_.delta, cfg_.sqrt_weights); }

void QuadSyncSolver::alternate() {
  for (int m = 0; m < 4; ++m) update_camera_factor(m);
  solve_scales();
}

double QuadSyncSolver::data_objective() const { return term_.objective(c_); }

double QuadSyncSolver::penalty() const {
  double s = 0;
  for (std::size_t i = 0; i < 4; ++i) s += (c_[i] - b_ + gamma_[i]).squaredNorm();
  return rho_ / 2.0 * s;
}

double QuadSyncSolver::objective() const { return data_objective() + penalty(); }

double QuadSyncSolver::consensus_gap() const {
  const double bn = b_.norm();
  double g = 0;
  for (const auto& c : c_) g = std::max(g, (c - b_).norm());
  return bn > 0 ? g / bn : g;
}

CameraStack QuadSyncSolver::cameras() const {
  Eigen::MatrixXd avg = (c_[0] + c_[1] + c_[2] + c_[3]) / 4.0;
  return CameraStack::from_stacked(avg);
}

void QuadSyncSolver::run() {
  const auto t0 = Clock::now();
  diag_.iterations.clear();
  double last = objective();
  bool stop = false;
  for (int it = 0; it < cfg_.irls_iters && !stop; ++it) {
    const Factors4 c_snap = c_, g_snap = gamma_;
    const Eigen::MatrixXd b_snap = b_;
    const std::vector<double> l_snap = term_.scales();
    const std::size_t rec_snap = diag_.iterations.size();
    const double start = objective();
    for (int k = 0; k < cfg_.admm_iters; ++k) {
      for (int a = 0; a < cfg_.alt_iters; ++a) alternate();
      update_consensus();
      update_duals();
      const double obj = objective();
      if (!std::isfinite(obj))
        throw DivergenceError("objective is not finite at IRLS iteration " + std::to_string(it), diag_);
      diag_.iterations.push_back({it, k, obj, consensus_gap(), seconds_since(t0)});
      if (cfg_.early_stop && std::abs(last - obj) <= cfg_.early_stop_tol * std::max(1.0, std::abs(last))) stop = true;
      last = obj;
      if (stop) break;
    }
    if (cfg_.divergence_guard && !diag_.rho_halved && last > 10.0 * start) {
      // single retry of this pass with half the penalty
      c_ = c_snap;
      gamma_ = g_snap;
      b_ = b_snap;
      term_.scales() = l_snap;
      diag_.iterations.resize(rec_snap);
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
  diag_.residual_histogram = residual_histogram(term_.residual_norms(c_));
  diag_.total_s = seconds_since(t0);
}

SyncResult run_quadsync(const BlockTensor4& q, const QuadSyncConfig& cfg) {
  QuadSyncSolver s(q, cfg);
  s.run();
  return {s.cameras(), s.diagnostics()};
}

}  // namespace qsync
