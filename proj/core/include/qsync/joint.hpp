#pragma once

// Joint IRLS-ADMM synchronization of block quadrifocal, trifocal and
// essential entities,
//
//   1/n_Q sum w^2 || l Q - [G_Q; C1, C2, C3, C4] ||^2
// + 1/n_T sum w^2 || l T - [G_T; P1, C5, C6] ||^2
// + 1/n_E sum w^2 || l E - [G_E; P2, P3] ||^2
// + rho/2 sum_i || C_i - B + Gamma_i ||^2 + rho/2 sum_i || P_i - D + tau_i ||^2.
//
// An entity without observed blocks is dropped together with the factors
// only it uses. Indices below are 0-based: cameras C[0..5], line
// projections P[0..2].

#include "qsync/block_tensor.hpp"
#include "qsync/quad_term.hpp"
#include "qsync/quadsync.hpp"

#include <array>
#include <optional>
#include <vector>

namespace qsync {

struct JointConfig {
  double rho = 1e-5;
  int irls_iters = 2;
  int admm_iters = 1;
  int alt_iters = 2;
  double delta = 1e-4;
  bool sqrt_weights = true;
  bool early_stop = false;
  double early_stop_tol = 1e-10;
  bool divergence_guard = true;
};

// Weighted trifocal data term over ordered observed triples (i, j, k) with
// model G_T x_1 P_i x_2 C_j x_3 C'_k. Scales are symmetric in the last two
// indices.
class TriTerm {
 public:
  explicit TriTerm(const BlockTensor3& t);

  int n() const { return n_; }
  std::size_t tuple_count() const { return tuples_.size(); }
  const std::vector<Triple>& tuples() const { return tuples_; }

  TriBlock model_block(std::size_t tuple, const Eigen::MatrixXd& p, const Eigen::MatrixXd& c2,
                       const Eigen::MatrixXd& c3) const;
  // Mode 0 solves for rows of P (6 unknowns), modes 1 and 2 for camera rows.
  // M is d x d and R is 3 x d per camera, both multiplied by `scale`.
  void normals(int mode, const Eigen::MatrixXd& p, const Eigen::MatrixXd& c2, const Eigen::MatrixXd& c3,
               double scale, std::vector<Eigen::MatrixXd>& M, std::vector<Eigen::MatrixXd>& R) const;

  std::vector<double> residual_norms(const Eigen::MatrixXd& p, const Eigen::MatrixXd& c2,
                                     const Eigen::MatrixXd& c3) const;
  double objective(const Eigen::MatrixXd& p, const Eigen::MatrixXd& c2, const Eigen::MatrixXd& c3) const;
  void update_scales(const Eigen::MatrixXd& p, const Eigen::MatrixXd& c2, const Eigen::MatrixXd& c3);
  void update_weights(const Eigen::MatrixXd& p, const Eigen::MatrixXd& c2, const Eigen::MatrixXd& c3,
                      double delta, bool sqrt_residual);

  // Leading vectors of the mode-1 flattening (camera column space).
  Eigen::MatrixXd camera_init() const;

  std::vector<double>& scales() { return lambda_; }
  const std::vector<double>& scales() const { return lambda_; }
  const std::vector<double>& weights() const { return weight_; }
  std::vector<double>& weights() { return weight_; }
  // Tuple id of (i, k, j), the partner sharing the same scale.
  int partner(std::size_t tuple) const { return partner_[tuple]; }

 private:
  int n_ = 0;
  std::vector<Triple> tuples_;
  std::vector<TriBlock> blocks_;
  std::vector<double> norm2_;
  std::vector<int> partner_;
  std::array<std::vector<std::vector<int>>, 3> groups_;
  std::vector<double> lambda_;
  std::vector<double> weight_;
};

// Weighted essential data term over ordered observed pairs (i, j) with
// model P_i G_E P'_j^T. Scales are symmetric.
class PairTerm {
 public:
  explicit PairTerm(const BlockMatrix& e);

  int n() const { return n_; }
  std::size_t tuple_count() const { return tuples_.size(); }
  const std::vector<Pair>& tuples() const { return tuples_; }

  Eigen::Matrix3d model_block(std::size_t tuple, const Eigen::MatrixXd& p2, const Eigen::MatrixXd& p3) const;
  void normals(int mode, const Eigen::MatrixXd& p2, const Eigen::MatrixXd& p3, double scale,
               std::vector<Eigen::MatrixXd>& M, std::vector<Eigen::MatrixXd>& R) const;

  std::vector<double> residual_norms(const Eigen::MatrixXd& p2, const Eigen::MatrixXd& p3) const;
  double objective(const Eigen::MatrixXd& p2, const Eigen::MatrixXd& p3) const;
  void update_scales(const Eigen::MatrixXd& p2, const Eigen::MatrixXd& p3);
  void update_weights(const Eigen::MatrixXd& p2, const Eigen::MatrixXd& p3, double delta, bool sqrt_residual);

  std::vector<double>& scales() { return lambda_; }
  const std::vector<double>& scales() const { return lambda_; }
  const std::vector<double>& weights() const { return weight_; }
  std::vector<double>& weights() { return weight_; }
  int partner(std::size_t tuple) const { return partner_[tuple]; }

 private:
  int n_ = 0;
  std::vector<Pair> tuples_;
  std::vector<Eigen::Matrix3d> blocks_;
  std::vector<double> norm2_;
  std::vector<int> partner_;
  std::array<std::vector<std::vector<int>>, 2> groups_;
  std::vector<double> lambda_;
  std::vector<double> weight_;
};

class JointSolver {
 public:
  // Entities are normalized blockwise on entry. Throws when neither the
  // quadrifocal nor the trifocal entity has observed blocks.
  JointSolver(BlockTensor4 q, const BlockTensor3& t, const BlockMatrix& e, JointConfig cfg);

  bool has_quad() const { return nq_ > 0; }
  bool has_tri() const { return nt_ > 0; }
  bool has_ess() const { return ne_ > 0; }
  std::size_t n_quad() const { return nq_; }
  std::size_t n_tri() const { return nt_; }
  std::size_t n_ess() const { return ne_; }
  bool camera_active(int i) const;
  bool lineproj_active(int i) const;

  void initialize();
  void update_camera(int i);    // 0..5
  void update_lineproj(int i);  // 0..2
  void update_scales();
  void update_consensus();
  void update_duals();
  void update_weights();
  // C_1..C_6, P_1..P_3, then the three scale tensors.
  void alternate();
  void run();

  double objective() const;
  // Normalized data terms, zero for a dropped entity.
  double quad_term() const;
  double tri_term() const;
  double ess_term() const;
  double penalty() const;

  // Average of C_1..C_4, or of C_5, C_6 without quadrifocal data.
  CameraStack cameras() const;

  const Eigen::MatrixXd& camera_factor(int i) const { return c_.at(static_cast<std::size_t>(i)); }
  const Eigen::MatrixXd& lineproj_factor(int i) const { return p_.at(static_cast<std::size_t>(i)); }
  void set_camera_factor(int i, const Eigen::MatrixXd& m) { c_.at(static_cast<std::size_t>(i)) = m; }
  void set_lineproj_factor(int i, const Eigen::MatrixXd& m) { p_.at(static_cast<std::size_t>(i)) = m; }
  const Eigen::MatrixXd& consensus_b() const { return b_; }
  const Eigen::MatrixXd& consensus_d() const { return d_; }
  const Eigen::MatrixXd& gamma(int i) const { return gamma_.at(static_cast<std::size_t>(i)); }
  const Eigen::MatrixXd& tau(int i) const { return tau_.at(static_cast<std::size_t>(i)); }
  void set_gamma(int i, const Eigen::MatrixXd& m) { gamma_.at(static_cast<std::size_t>(i)) = m; }
  void set_tau(int i, const Eigen::MatrixXd& m) { tau_.at(static_cast<std::size_t>(i)) = m; }

  const QuadTerm& quad() const { return q_; }
  const TriTerm& tri() const { return t_; }
  const PairTerm& ess() const { return e_; }
  QuadTerm& quad() { return q_; }
  TriTerm& tri() { return t_; }
  PairTerm& ess() { return e_; }
  double rho() const { return rho_; }
  const SolverDiagnostics& diagnostics() const { return diag_; }

 private:
  Factors4 quad_factors() const;
  void solve_rows(const std::vector<Eigen::MatrixXd>& M, const std::vector<Eigen::MatrixXd>& R,
                  const Eigen::MatrixXd& target, Eigen::MatrixXd& out, const char* what) const;
  void record(int irls, int admm, double obj, double wall);

  JointConfig cfg_;
  QuadTerm q_;
  TriTerm t_;
  PairTerm e_;
  std::size_t nq_ = 0, nt_ = 0, ne_ = 0;
  double rho_;
  std::array<Eigen::MatrixXd, 6> c_;
  std::array<Eigen::MatrixXd, 3> p_;
  std::array<Eigen::MatrixXd, 6> gamma_;
  std::array<Eigen::MatrixXd, 3> tau_;
  Eigen::MatrixXd b_, d_;
  SolverDiagnostics diag_;
};

SyncResult run_joint(const BlockTensor4& q, const BlockTensor3& t, const BlockMatrix& e,
                     const JointConfig& cfg = {});

}  // namespace qsync
