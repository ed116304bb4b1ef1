#include "qsync/joint.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

namespace qsync {
namespace {

struct Entities {
  CameraStack gt;
  BlockTensor4 q;
  BlockTensor3 t;
  BlockMatrix e;
};

Entities entities(int n, double noise, std::uint64_t seed, CameraLayout layout = CameraLayout::generic) {
  Entities x;
  x.gt = generate_cameras(n, layout, seed);
  const Observation o = full_observation(n);
  x.q = build_noisy_block_tensor4(x.gt, o.quads, noise, seed + 1, true);
  x.t = build_noisy_block_tensor3(x.gt, o.triples, noise, seed + 2, true);
  x.e = build_noisy_block_matrix(x.gt, o.pairs, noise, seed + 3, true);
  return x;
}

template <class Get, class Set>
double stationarity(JointSolver& s, Get get, Set set) {
  const Eigen::MatrixXd x0 = get(s);
  auto f = [&](const Eigen::MatrixXd& x) {
    JointSolver copy = s;
    set(copy, x);
    return copy.objective();
  };
  const Eigen::MatrixXd at = test::numeric_gradient(x0, f);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  const Eigen::MatrixXd off = test::numeric_gradient(
      x0 + 0.01 * x0.norm() / std::sqrt(static_cast<double>(x0.size())) * Eigen::MatrixXd::NullaryExpr(x0.rows(), x0.cols(), [&] { return g(rng); }), f);
  return at.norm() / off.norm();
}

TEST(TriTerm, ModelBlockIsTrifocalOfFactors) {
  std::mt19937_64 rng(61);
  const Entities x = entities(4, 0.0, 1);
  const TriTerm term(x.t);
  const CameraStack a = test::random_cameras(4, rng), b = test::random_cameras(4, rng);
  const Eigen::MatrixXd p = line_projection_stack(a);
  for (std::size_t id = 0; id < term.tuple_count(); id += 5) {
    const Triple& t = term.tuples()[id];
    // first factor enters through its line projection
    const TriBlock ref = trifocal_from_cameras(a.cameras[static_cast<std::size_t>(t[0])], b.cameras[static_cast<std::size_t>(t[1])],
                                               b.cameras[static_cast<std::size_t>(t[2])]);
    const TriBlock got = term.model_block(id, p, b.stacked(), b.stacked());
    for (std::size_t k = 0; k < 27; ++k) EXPECT_NEAR(got[k], ref[k], 1e-10);
  }
}

TEST(PairTerm, ModelBlockIsEssentialOfFactors) {
  std::mt19937_64 rng(62);
  const Entities x = entities(4, 0.0, 2);
  const PairTerm term(x.e);
  const CameraStack a = test::random_cameras(4, rng);
  const Eigen::MatrixXd p = line_projection_stack(a);
  for (std::size_t id = 0; id < term.tuple_count(); ++id) {
    const Pair& t = term.tuples()[id];
    const Eigen::Matrix3d ref = essential_from_cameras(a.cameras[static_cast<std::size_t>(t[0])], a.cameras[static_cast<std::size_t>(t[1])]);
    EXPECT_LT((term.model_block(id, p, p) - ref).norm(), 1e-10 * ref.norm());
  }
}

TEST(JointSolver, EntityCounts) {
  const Entities x = entities(5, 0.0, 3);
  const JointSolver s(x.q, x.t, x.e, {});
  EXPECT_EQ(s.n_quad(), 24u * 5);
  EXPECT_EQ(s.n_tri(), 6u * 10);
  EXPECT_EQ(s.n_ess(), 2u * 10);
}

TEST(JointSolver, UpdatesAreStationary) {
  const Entities x = entities(5, 3.0, 4);
  JointConfig cfg;
  cfg.rho = 0.1;
  JointSolver s(x.q, x.t, x.e, cfg);
  s.alternate();
  for (int i = 0; i < 6; ++i) {
    s.update_camera(i);
    EXPECT_LT(stationarity(
                  s, [i](const JointSolver& j) { return j.camera_factor(i); },
                  [i](JointSolver& j, const Eigen::MatrixXd& m) { j.set_camera_factor(i, m); }),
              1e-5)
        << "camera factor " << i;
  }
  for (int i = 0; i < 3; ++i) {
    s.update_lineproj(i);
    EXPECT_LT(stationarity(
                  s, [i](const JointSolver& j) { return j.lineproj_factor(i); },
                  [i](JointSolver& j, const Eigen::MatrixXd& m) { j.set_lineproj_factor(i, m); }),
              1e-5)
        << "line projection factor " << i;
  }
}

TEST(JointSolver, DualsSumToZeroAfterConsensus) {
  const Entities x = entities(5, 2.0, 5);
  JointSolver s(x.q, x.t, x.e, {});
  for (int k = 0; k < 2; ++k) {
    s.alternate();
    s.update_consensus();
    s.update_duals();
  }
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(15, 4), t = Eigen::MatrixXd::Zero(15, 6);
  for (int i = 0; i < 6; ++i) g += s.gamma(i);
  for (int i = 0; i < 3; ++i) t += s.tau(i);
  EXPECT_LT(g.norm(), 1e-12);
  EXPECT_LT(t.norm(), 1e-12);
}

TEST(JointSolver, ExactDataRecoversCameras) {
  const Entities x = entities(6, 0.0, 6, CameraLayout::collinear);
  JointConfig cfg;
  cfg.irls_iters = 4;
  cfg.alt_iters = 10;
  const SyncResult r = run_joint(x.q, x.t, x.e, cfg);
  const PoseErrors e = evaluate_against_ground_truth(r.cameras, x.gt);
  EXPECT_LT(e.mean_location, 1e-6);
  EXPECT_LT(e.mean_rotation, 1e-6);
  ASSERT_EQ(r.diagnostics.term_names.size(), 3u);
}

TEST(JointSolver, QuadOnlyMatchesQuadSync) {
  const Entities x = entities(6, 2.0, 7);
  QuadSyncConfig qc;
  qc.irls_iters = 2;
  qc.alt_iters = 3;
  const SyncResult a = run_quadsync(x.q, qc);
  JointConfig jc;
  jc.irls_iters = 2;
  jc.alt_iters = 3;
  jc.rho = qc.rho / (24.0 * 15);
  const SyncResult b = run_joint(x.q, BlockTensor3(6), BlockMatrix(6), jc);
  EXPECT_LT((a.cameras.stacked() - b.cameras.stacked()).norm(), 1e-9 * a.cameras.stacked().norm());
}

TEST(JointSolver, DroppedEntities) {
  const Entities x = entities(5, 0.0, 8);
  const JointSolver no_quad(BlockTensor4(5), x.t, x.e, {});
  EXPECT_FALSE(no_quad.has_quad());
  EXPECT_FALSE(no_quad.camera_active(0));
  EXPECT_TRUE(no_quad.camera_active(4));
  EXPECT_EQ(no_quad.quad_term(), 0.0);
  const JointSolver no_ess(x.q, x.t, BlockMatrix(5), {});
  EXPECT_FALSE(no_ess.lineproj_active(1));
  EXPECT_TRUE(no_ess.lineproj_active(0));
  EXPECT_THROW(JointSolver(BlockTensor4(5), BlockTensor3(5), x.e, {}), Error);
}

}  // namespace
}  // namespace qsync
