#pragma once

// Four-cycle consistency of camera triples, quadrifocal estimation from
// consistent cycles, and vertex density pruning of the viewing hypergraph.

#include "qsync/block_tensor.hpp"
#include "qsync/camera_io.hpp"
#include "qsync/geometry.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qsync {

// Triples (i,j,k), (j,k,l), (k,l,i), (l,i,j), each brought into the frame of
// the first by chained overlap alignment.
struct ChainResult {
  Quad quad{};
  // aligned[s][c]: camera c of triple s in the frame of triple 0.
  std::array<std::array<Mat34, 3>, 4> aligned{};
  std::array<std::array<int, 3>, 4> views{};
  std::array<double, 3> residuals{};  // of the three alignments
  bool degenerate = false;
  std::string reason;
  // (P^1_i, P^4_i H_43) and (P^1_j, P^4_j H_43)
  std::array<std::pair<Mat34, Mat34>, 2> closure{};
};

struct CycleThresholds {
  double rotation_deg = 3.0;
  double location = 0.2;
  // alignment residual above which an overlap counts as degenerate
  double max_alignment_residual = 0.5;
};

// Throws when the triples do not form the cycle (i,j,k), (j,k,l), (k,l,i),
// (l,i,j).
ChainResult chain_alignments(const CameraTriple& t_ijk, const CameraTriple& t_jkl, const CameraTriple& t_kli,
                             const CameraTriple& t_lij, const CycleThresholds& th = {});

struct CycleHeuristic {
  double rotation_deg = 0;
  double location = 0;
};

// Average over the two closure cameras of the rotation angle and of the
// location difference relative to the spread of the quadruple's centers in
// the first frame.
CycleHeuristic cycle_heuristic(const ChainResult& chain);

struct CycleVerdict {
  Quad quad{};
  CycleHeuristic heuristic;
  bool accepted = false;
  std::string reason;
  std::optional<std::array<Mat34, 4>> fused;  // cameras i, j, k, l
};

CycleVerdict evaluate_cycle(const CameraTriple& t_ijk, const CameraTriple& t_jkl, const CameraTriple& t_kli,
                            const CameraTriple& t_lij, const CycleThresholds& th = {});

// Per camera of the quadruple, the chordal mean rotation, mean center and
// mean calibration over its estimates in the chain.
std::array<Mat34, 4> fuse_cameras(const ChainResult& chain);
// Quadrifocal block of the fused cameras, unit Frobenius norm.
QuadBlock fuse_quadruple(const ChainResult& chain);

void write_verdicts_csv(std::ostream& os, const std::vector<CycleVerdict>& v);

struct ViewingHypergraph {
  int n = 0;
  std::vector<int> vertices;  // surviving camera labels, ascending
  std::vector<Quad> quads;    // sorted camera sets
  std::vector<Triple> triples;
  double threshold_used = 0;
};

ViewingHypergraph make_hypergraph(int n, std::vector<Quad> quads, std::vector<Triple> triples = {});
// Fraction of the possible quadruples containing each surviving vertex that
// are observed, indexed like `vertices`.
std::vector<double> vertex_densities(const ViewingHypergraph& h);
// Repeatedly removes vertices with density below the first threshold; if
// fewer than min_cameras survive, starts over with the next threshold.
ViewingHypergraph prune_low_density(const ViewingHypergraph& h, const std::vector<double>& thresholds = {0.05, 0.02, 0.01},
                                    int min_cameras = 4);

// Synthetic triples cut from cameras: each triple is perturbed independently
// (relative Frobenius noise) and mapped to its own random similarity frame.
CameraTriple synthetic_triple(const CameraStack& c, const std::array<int, 3>& views, double noise_pct,
                              std::uint64_t seed);

}  // namespace qsync
