#include "qsync/cycles.hpp"

#include "qsync/error.hpp"
#include "qsync/multifocal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

namespace qsync {

namespace {

int position(const std::array<int, 3>& views, int v) {
  for (int c = 0; c < 3; ++c)
    if (views[static_cast<std::size_t>(c)] == v) return c;
  return -1;
}

// Aligns `src` onto the frame of `dst` through the shared views a, b.
ProjectiveAlignment align_triples(const std::array<Mat34, 3>& dst, const std::array<int, 3>& dst_views,
                                  const std::array<Mat34, 3>& src, const std::array<int, 3>& src_views, int a, int b) {
  const std::array<CameraCorrespondence, 2> pairs{
      CameraCorrespondence{src[static_cast<std::size_t>(position(src_views, a))],
                           dst[static_cast<std::size_t>(position(dst_views, a))]},
      CameraCorrespondence{src[static_cast<std::size_t>(position(src_views, b))],
                           dst[static_cast<std::size_t>(position(dst_views, b))]}};
  return align_overlap(pairs);
}

std::array<Mat34, 3> transform(const std::array<Mat34, 3>& c, const Eigen::Matrix4d& h) {
  return {c[0] * h, c[1] * h, c[2] * h};
}

}  // namespace

ChainResult chain_alignments(const CameraTriple& t_ijk, const CameraTriple& t_jkl, const CameraTriple& t_kli,
                             const CameraTriple& t_lij, const CycleThresholds& th) {
  const int i = t_ijk.views[0], j = t_ijk.views[1], k = t_ijk.views[2], l = t_jkl.views[2];
  const std::array<std::array<int, 3>, 4> expect{{{i, j, k}, {j, k, l}, {k, l, i}, {l, i, j}}};
  const std::array<const CameraTriple*, 4> in{&t_ijk, &t_jkl, &t_kli, &t_lij};
  for (std::size_t s = 0; s < 4; ++s)
    if (in[s]->views != expect[s]) throw Error(ErrorCode::invalid_argument, "triples do not form the cycle ijk, jkl, kli, lij");
  if (i == j || i == k || i == l || j == k || j == l || k == l)
    throw Error(ErrorCode::invalid_argument, "cycle views must be distinct");

  ChainResult out;
  out.quad = {i, j, k, l};
  out.views = expect;
  out.aligned[0] = t_ijk.cameras;
  // shared views of consecutive triples: (j,k), (k,l), (l,i)
  const std::array<std::array<int, 2>, 3> shared{{{j, k}, {k, l}, {l, i}}};
  for (std::size_t s = 1; s < 4; ++s) {
    const ProjectiveAlignment a = align_triples(out.aligned[s - 1], expect[s - 1], in[s]->cameras, expect[s],
                                                shared[s - 1][0], shared[s - 1][1]);
    out.residuals[s - 1] = a.residual;
    if (a.degenerate || a.residual > th.max_alignment_residual) {
      out.degenerate = true;
      if (out.reason.empty())
        out.reason = "degenerate overlap in alignment " + std::to_string(s) + " (residual " + std::to_string(a.residual) + ")";
    }
    out.aligned[s] = transform(in[s]->cameras, a.H);
  }
  out.closure[0] = {out.aligned[0][0], out.aligned[3][static_cast<std::size_t>(position(expect[3], i))]};
  out.closure[1] = {out.aligned[0][1], out.aligned[3][static_cast<std::size_t>(position(expect[3], j))]};
  return out;
}

CycleHeuristic cycle_heuristic(const ChainResult& chain) {
  // reference centers of i, j, k (triple 1) and l (triple 2) in the first frame
  std::vector<Eigen::Vector3d> ref;
  for (int c = 0; c < 3; ++c) ref.push_back(decompose_camera(chain.aligned[0][static_cast<std::size_t>(c)]).center);
  ref.push_back(decompose_camera(chain.aligned[1][2]).center);
  CycleHeuristic h;
  for (const auto& [a, b] : chain.closure) {
    const CameraPose pa = decompose_camera(a), pb = decompose_camera(b);
    h.rotation_deg += rotation_distance_deg(pa.R, pb.R) / 2.0;
    h.location += relative_location_distance(pa.center, pb.center, ref) / 2.0;
  }
  return h;
}

CycleVerdict evaluate_cycle(const CameraTriple& t_ijk, const CameraTriple& t_jkl, const CameraTriple& t_kli,
                            const CameraTriple& t_lij, const CycleThresholds& th) {
  CycleVerdict v;
  v.quad = {t_ijk.views[0], t_ijk.views[1], t_ijk.views[2], t_jkl.views[2]};
  ChainResult chain;
  try {
    chain = chain_alignments(t_ijk, t_jkl, t_kli, t_lij, th);
    if (chain.degenerate) {
      v.reason = chain.reason;
      return v;
    }
    v.heuristic = cycle_heuristic(chain);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_argument) throw;
    v.reason = e.what();
    return v;
  }
  if (!std::isfinite(v.heuristic.rotation_deg) || !std::isfinite(v.heuristic.location)) {
    v.reason = "non-finite heuristic";
    return v;
  }
  v.accepted = v.heuristic.rotation_deg <= th.rotation_deg && v.heuristic.location <= th.location;
  if (!v.accepted) {
    v.reason = "inconsistent cycle";
    return v;
  }
  v.fused = fuse_cameras(chain);
  return v;
}

std::array<Mat34, 4> fuse_cameras(const ChainResult& chain) {
  std::array<Mat34, 4> out;
  for (std::size_t m = 0; m < 4; ++m) {
    const int view = chain.quad[m];
    std::vector<Eigen::Matrix3d> rs;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Matrix3d k = Eigen::Matrix3d::Zero();
    for (std::size_t s = 0; s < 4; ++s) {
      const int c = position(chain.views[s], view);
      if (c < 0) continue;
      const CameraPose p = decompose_camera(chain.aligned[s][static_cast<std::size_t>(c)]);
      rs.push_back(p.R);
      center += p.center;
      k += p.K;
    }
    const double cnt = static_cast<double>(rs.size());
    out[m] = compose_camera(k / cnt, chordal_mean(rs), center / cnt);
  }
  return out;
}

QuadBlock fuse_quadruple(const ChainResult& chain) {
  const auto c = fuse_cameras(chain);
  QuadBlock q = quadrifocal_from_cameras(c[0], c[1], c[2], c[3]);
  const double nrm = block_norm(q);
  if (nrm == 0.0) throw Error(ErrorCode::degenerate, "fused quadrifocal tensor vanishes");
  for (double& v : q) v /= nrm;
  return q;
}

void write_verdicts_csv(std::ostream& os, const std::vector<CycleVerdict>& v) {
  os << "i,j,k,l,rotation_deg,location,accepted,reason\n";
  char buf[96];
  for (const auto& c : v) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.10g,%.10g,%d,", c.quad[0], c.quad[1], c.quad[2], c.quad[3],
                  c.heuristic.rotation_deg, c.heuristic.location, c.accepted ? 1 : 0);
    std::string reason = c.reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    os << buf << reason << '\n';
  }
}

ViewingHypergraph make_hypergraph(int n, std::vector<Quad> quads, std::vector<Triple> triples) {
  if (n < 0) throw Error(ErrorCode::invalid_argument, "negative camera count");
  ViewingHypergraph h;
  h.n = n;
  for (int v = 0; v < n; ++v) h.vertices.push_back(v);
  for (auto& q : quads) {
    std::sort(q.begin(), q.end());
    for (int v : q)
      if (v < 0 || v >= n) throw Error(ErrorCode::out_of_range, "quadruple index out of range");
  }
  std::sort(quads.begin(), quads.end());
  quads.erase(std::unique(quads.begin(), quads.end()), quads.end());
  h.quads = std::move(quads);
  h.triples = std::move(triples);
  return h;
}

std::vector<double> vertex_densities(const ViewingHypergraph& h) {
  const double m = static_cast<double>(h.vertices.size());
  const double possible = (m - 1) * (m - 2) * (m - 3) / 6.0;
  std::vector<double> count(h.vertices.size(), 0.0);
  for (const Quad& q : h.quads)
    for (int v : q) {
      const auto it = std::lower_bound(h.vertices.begin(), h.vertices.end(), v);
      if (it != h.vertices.end() && *it == v) count[static_cast<std::size_t>(it - h.vertices.begin())] += 1.0;
    }
  for (double& c : count) c = possible > 0 ? c / possible : 0.0;
  return count;
}

namespace {

ViewingHypergraph prune_at(ViewingHypergraph h, double threshold) {
  for (;;) {
    const std::vector<double> d = vertex_densities(h);
    std::vector<int> keep;
    for (std::size_t v = 0; v < d.size(); ++v)
      if (d[v] >= threshold) keep.push_back(h.vertices[v]);
    if (keep.size() == h.vertices.size()) break;
    h.vertices = keep;
    auto alive = [&](int v) { return std::binary_search(keep.begin(), keep.end(), v); };
    std::erase_if(h.quads, [&](const Quad& q) { return !std::all_of(q.begin(), q.end(), alive); });
    std::erase_if(h.triples, [&](const Triple& t) { return !std::all_of(t.begin(), t.end(), alive); });
    if (keep.empty()) break;
  }
  h.threshold_used = threshold;
  return h;
}

}  // namespace

ViewingHypergraph prune_low_density(const ViewingHypergraph& h, const std::vector<double>& thresholds, int min_cameras) {
  if (thresholds.empty()) throw Error(ErrorCode::invalid_argument, "no density thresholds");
  for (std::size_t t = 1; t < thresholds.size(); ++t)
    if (thresholds[t] > thresholds[t - 1]) throw Error(ErrorCode::invalid_argument, "density thresholds must be descending");
  ViewingHypergraph last;
  for (double th : thresholds) {
    last = prune_at(h, th);
    if (static_cast<int>(last.vertices.size()) >= min_cameras) return last;
  }
  if (last.vertices.empty())
    throw Error(ErrorCode::degenerate, "density pruning removed every camera at threshold " + std::to_string(thresholds.back()));
  return last;
}

CameraTriple synthetic_triple(const CameraStack& c, const std::array<int, 3>& views, double noise_pct,
                              std::uint64_t seed) {
  CameraTriple t;
  t.views = views;
  CameraStack sub = c.subset(views);
  sub = perturb_cameras(sub, noise_pct, seed);
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.5, 2.0);
  // world change X -> s R X + t; cameras map by the inverse 4x4
  const Eigen::Vector3d axis = Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized();
  const Eigen::Matrix3d r = axis_angle(axis, std::acos(-1.0) * u(rng) / 2.0);
  Eigen::Matrix4d h = Eigen::Matrix4d::Identity();
  h.topLeftCorner<3, 3>() = u(rng) * r;
  h.topRightCorner<3, 1>() = Eigen::Vector3d(g(rng), g(rng), g(rng));
  const Eigen::Matrix4d hinv = h.inverse();
  for (std::size_t k = 0; k < 3; ++k) t.cameras[k] = sub.cameras[k] * hinv;
  return t;
}

}  // namespace qsync
