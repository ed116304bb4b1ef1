#pragma once

// IRLS-ADMM synchronization of a block quadrifocal tensor.
//
//   min  sum_t w_t^2 || lambda_t Q_t - G_Q x_1 C_1 x_2 C_2 x_3 C_3 x_4 C_4 ||^2
//        + rho/2 sum_i || C_i - B + Gamma_i ||^2,    ||Lambda||_F = 1
//
// Loop order: IRLS { ADMM { alternate (C_1..C_4, Lambda) ; B ; Gamma } ; W }.

#include "qsync/block_tensor.hpp"
#include "qsync/error.hpp"
#include "qsync/geometry.hpp"
#include "qsync/quad_term.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qsync {

struct QuadSyncConfig {
  double rho = 0.01;
  int irls_iters = 4;
  int admm_iters = 1;
  int alt_iters = 10;
  double delta = 1e-4;
  bool sqrt_weights = true;  // weight floor applied to sqrt(residual norm)
  int subsample_m = 0;       // 0 uses every column in the C updates
  std::uint64_t seed = 0;
  bool early_stop = false;
  double early_stop_tol = 1e-10;
  bool divergence_guard = true;
};

struct IterationRecord {
  int irls = 0;
  int admm = 0;
  double objective = 0;
  double consensus_gap = 0;
  double wall_s = 0;
};

struct SolverDiagnostics {
  std::vector<IterationRecord> iterations;
  // extra named objective terms per iteration (joint solver)
  std::vector<std::string> term_names;
  std::vector<std::vector<double>> term_values;
  double c_update_s = 0;
  double total_s = 0;
  bool rho_halved = false;
  double final_rho = 0;
  // counts of final block residuals per decade, [1e-16, 1e-15), ..., [1, inf)
  std::vector<int> residual_histogram;
};

void write_diagnostics_csv(std::ostream& os, const SolverDiagnostics& d);
std::vector<int> residual_histogram(const std::vector<double>& residuals);

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, SolverDiagnostics d)
      : Error(ErrorCode::divergence, what), diagnostics(std::move(d)) {}
  SolverDiagnostics diagnostics;
};

struct SyncResult {
  CameraStack cameras;  // projective frame
  SolverDiagnostics diagnostics;
};

class QuadSyncSolver {
 public:
  // Runs the initialization: HOSVD factors, scales, weights, zero duals.
  QuadSyncSolver(BlockTensor4 q, QuadSyncConfig cfg);

  void initialize();
  void update_camera_factor(int mode);
  void solve_scales();
  void update_consensus();
  void update_duals();
  void update_weights();

  // One pass of the alternation: C_1..C_4 then Lambda.
  void alternate();
  void run();

  double objective() const;
  double data_objective() const;
  double penalty() const;
  // max_i ||C_i - B||_F / ||B||_F
  double consensus_gap() const;

  // Average of the four factors.
  CameraStack cameras() const;

  const Factors4& factors() const { return c_; }
  const Eigen::MatrixXd& consensus() const { return b_; }
  const Factors4& duals() const { return gamma_; }
  void set_factor(int mode, const Eigen::MatrixXd& c) { c_.at(static_cast<std::size_t>(mode)) = c; }
  void set_consensus(const Eigen::MatrixXd& b) { b_ = b; }
  void set_dual(int mode, const Eigen::MatrixXd& g) { gamma_.at(static_cast<std::size_t>(mode)) = g; }

  QuadTerm& term() { return term_; }
  const QuadTerm& term() const { return term_; }
  const QuadSyncConfig& config() const { return cfg_; }
  double rho() const { return rho_; }
  const SolverDiagnostics& diagnostics() const { return diag_; }

 private:
  QuadSyncConfig cfg_;
  QuadTerm term_;
  double rho_;
  Factors4 c_;
  Eigen::MatrixXd b_;
  Factors4 gamma_;
  std::uint64_t update_counter_ = 0;
  SolverDiagnostics diag_;
};

// Runs the full algorithm and returns the averaged factor as cameras.
SyncResult run_quadsync(const BlockTensor4& q, const QuadSyncConfig& cfg = {});

// Leading four left singular vectors of the mode-0 flattening.
Eigen::MatrixXd hosvd_camera_init(const QuadTerm& term);

}  // namespace qsync
