// Triangulated-domain fast marching (two-support planar updates, obtuse
// angles handled by unfolding across edges with a two-point fallback),
// farthest-point sampling, and the sampled geodesic distance block.

#include "sgmds/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "sgmds/errors.hpp"
#include "sgmds/threads.hpp"

namespace sgmds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum : char { kFar = 0, kTrial = 1, kDead = 2 };

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// Planar two-support update: support values d1, d2 at edge lengths b
// (support 1) and a (support 2) from the updated vertex, cos of the angle
// between the edges. Returns the first-arrival estimate; the two-point
// candidates are always folded into the result, so the value never exceeds
// an edge-graph relaxation.
double planar_update(double d1, double d2, double a, double b, double cos_v) {
  const double two_point = std::min(b + d1, a + d2);
  const double sin2 = std::max(1.0 - cos_v * cos_v, 0.0);

  const double u = d2 - d1;
  const double f2 = a * a + b * b - 2.0 * a * b * cos_v;
  const double f1 = b * u * (a * cos_v - b);
  const double f0 = b * b * (u * u - a * a * sin2);
  const double delta = f1 * f1 - f0 * f2;

  double t = kInf;
  if (delta >= 0.0) {
    if (std::abs(f2) > 1e-300) {
      t = (-f1 - std::sqrt(delta)) / f2;
      // Upwind conditions select the root with the front sweeping through
      // the triangle interior.
      if (t < u || b * (t - u) / t < a * cos_v || a / cos_v < b * (t - u) / t)
        t = (-f1 + std::sqrt(delta)) / f2;
    } else if (f1 != 0.0) {
      t = -f0 / f1;
    }
  }
  if (u < t && a * cos_v < b * (t - u) / t && b * (t - u) / t < a / cos_v)
    return std::min(t + d1, two_point);
  return two_point;
}

}  // namespace

FastMarcher::FastMarcher(const TriMesh& mesh) : mesh_(&mesh) {
  vertex_tris_.resize(static_cast<std::size_t>(mesh.n()));
  for (int t = 0; t < mesh.m(); ++t)
    for (int k = 0; k < 3; ++k)
      vertex_tris_[static_cast<std::size_t>(
                       mesh.triangles[static_cast<std::size_t>(t)][k])]
          .push_back(t);
  edge_tris_.reserve(static_cast<std::size_t>(mesh.m()) * 2);
  for (int t = 0; t < mesh.m(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    for (int k = 0; k < 3; ++k) {
      auto [it, inserted] =
          edge_tris_.try_emplace(edge_key(tri[k], tri[(k + 1) % 3]),
                                 std::pair<int, int>{t, -1});
      if (!inserted) it->second.second = t;
    }
  }
}

int FastMarcher::neighbor_across(int tri, int a, int b) const {
  const auto it = edge_tris_.find(edge_key(a, b));
  if (it == edge_tris_.end()) return -1;
  if (it->second.first == tri) return it->second.second;
  if (it->second.second == tri) return it->second.first;
  return -1;
}

int FastMarcher::third_vertex(int tri, int a, int b) const {
  const auto& t = mesh_->triangles[static_cast<std::size_t>(tri)];
  for (int k = 0; k < 3; ++k)
    if (t[k] != a && t[k] != b) return t[k];
  return -1;
}

// Walks the unfolded triangle strip across edge (va, vb) of `tri` until a
// vertex splits the obtuse wedge at v into two acute parts, or gives up
// after a bounded number of flips.
bool FastMarcher::unfold_support(int tri, int v, int va, int vb,
                                 UnfoldResult* out) const {
  const auto& verts = mesh_->vertices;
  const Eigen::Vector3d& pv = verts[static_cast<std::size_t>(v)];
  Eigen::Vector3d ea = verts[static_cast<std::size_t>(va)] - pv;
  Eigen::Vector3d eb = verts[static_cast<std::size_t>(vb)] - pv;
  const double ra = ea.norm(), rb = eb.norm();
  if (!(ra > 0.0) || !(rb > 0.0)) return false;
  ea /= ra;
  eb /= rb;
  const double cos_t = ea.dot(eb);
  const double sin_t = std::sqrt(std::max(1.0 - cos_t * cos_t, 0.0));

  // 2D frame: v at the origin, direction to va along +x.
  Eigen::Vector2d x1(ra, 0.0);
  Eigen::Vector2d x2(rb * cos_t, rb * sin_t);
  const Eigen::Vector2d dir_a(1.0, 0.0);
  const Eigen::Vector2d dir_b(cos_t, sin_t);

  int pv1 = va, pv2 = vb;
  int cur = neighbor_across(tri, va, vb);

  for (int flips = 0; flips < 50 && cur >= 0; ++flips) {
    const int w = third_vertex(cur, pv1, pv2);
    if (w < 0) return false;

    // Unfold w into the plane on the far side of segment (x1, x2).
    const double l1 = (verts[static_cast<std::size_t>(w)] -
                       verts[static_cast<std::size_t>(pv1)])
                          .norm();
    const double l2 = (verts[static_cast<std::size_t>(w)] -
                       verts[static_cast<std::size_t>(pv2)])
                          .norm();
    const Eigen::Vector2d seg = x2 - x1;
    const double seg_len = seg.norm();
    if (!(seg_len > 0.0)) return false;
    const Eigen::Vector2d seg_dir = seg / seg_len;
    const Eigen::Vector2d seg_normal(-seg_dir.y(), seg_dir.x());
    const double along =
        (l1 * l1 - l2 * l2 + seg_len * seg_len) / (2.0 * seg_len);
    const double off =
        std::sqrt(std::max(l1 * l1 - along * along, 0.0));
    const double origin_side = (-x1).dot(seg_normal) >= 0.0 ? 1.0 : -1.0;
    const Eigen::Vector2d wx =
        x1 + along * seg_dir - origin_side * off * seg_normal;

    const double wn = wx.norm();
    if (!(wn > 0.0)) return false;
    const double cos1 = wx.dot(dir_a) / wn;
    const double cos2 = wx.dot(dir_b) / wn;
    if (cos1 >= 0.0 && cos2 >= 0.0) {
      out->vertex = w;
      out->dist = wn;
      out->cos_a = cos1;
      out->cos_b = cos2;
      return true;
    }
    if (cos1 < 0.0) {
      // Apex beyond the va-side boundary; keep searching in (x1, w).
      cur = neighbor_across(cur, pv1, w);
      pv2 = w;
      x2 = wx;
    } else {
      cur = neighbor_across(cur, w, pv2);
      pv1 = w;
      x1 = wx;
    }
  }
  return false;
}

double FastMarcher::triangle_contribution(
    int v, int tri, const std::vector<double>& dist,
    const std::vector<char>& state) const {
  const auto& t = mesh_->triangles[static_cast<std::size_t>(tri)];
  int others[2] = {-1, -1};
  int cnt = 0;
  for (int k = 0; k < 3; ++k)
    if (t[k] != v) others[cnt++] = t[k];
  if (cnt != 2) return kInf;
  const int va = others[0], vb = others[1];

  const bool a_dead = state[static_cast<std::size_t>(va)] == kDead;
  const bool b_dead = state[static_cast<std::size_t>(vb)] == kDead;
  if (!a_dead && !b_dead) return kInf;

  const auto& verts = mesh_->vertices;
  const Eigen::Vector3d& pv = verts[static_cast<std::size_t>(v)];
  const double ra = (verts[static_cast<std::size_t>(va)] - pv).norm();
  const double rb = (verts[static_cast<std::size_t>(vb)] - pv).norm();
  const double da = dist[static_cast<std::size_t>(va)];
  const double db = dist[static_cast<std::size_t>(vb)];

  if (a_dead && !b_dead) return da + ra;
  if (!a_dead && b_dead) return db + rb;

  const double cos_v = (verts[static_cast<std::size_t>(va)] - pv)
                           .normalized()
                           .dot((verts[static_cast<std::size_t>(vb)] - pv)
                                    .normalized());

  // Direct update only when the wedge at v is not obtuse.
  double best = cos_v < 0.0 ? std::min(da + ra, db + rb)
                            : planar_update(da, db, rb, ra, cos_v);

  // Virtual supports from unfolding across the opposite edge. Mandatory for
  // obtuse wedges; for acute ones the extra stencils cover front directions
  // the direct pair resolves poorly.
  UnfoldResult uf;
  if (unfold_support(tri, v, va, vb, &uf) &&
      state[static_cast<std::size_t>(uf.vertex)] != kFar) {
    const double dw = dist[static_cast<std::size_t>(uf.vertex)];
    // planar_update(d1, d2, a, b, cos): b pairs with d1, a with d2.
    best = std::min(best, planar_update(da, dw, uf.dist, ra, uf.cos_a));
    best = std::min(best, planar_update(dw, db, rb, uf.dist, uf.cos_b));
  }
  return best;
}

double FastMarcher::update_vertex(int v, const std::vector<double>& dist,
                                  const std::vector<char>& state) const {
  double best = kInf;
  for (int tri : vertex_tris_[static_cast<std::size_t>(v)])
    best = std::min(best, triangle_contribution(v, tri, dist, state));
  return best;
}

std::vector<std::pair<int, double>> FastMarcher::near_field_seeds(
    int source) const {
  const auto& verts = mesh_->vertices;
  const Eigen::Vector3d& ps = verts[static_cast<std::size_t>(source)];
  std::unordered_map<int, double> seed;

  auto offer = [&seed](int v, double d) {
    auto [it, inserted] = seed.try_emplace(v, d);
    if (!inserted && d < it->second) it->second = d;
  };

  // One-ring: the incident edge is the local geodesic.
  for (int tri : vertex_tris_[static_cast<std::size_t>(source)]) {
    const auto& t = mesh_->triangles[static_cast<std::size_t>(tri)];
    for (int k = 0; k < 3; ++k)
      if (t[k] != source)
        offer(t[k], (verts[static_cast<std::size_t>(t[k])] - ps).norm());
  }
  const std::unordered_map<int, double> ring1 = seed;

  // Two-ring bent paths around a shared neighbor (always valid upper
  // bounds; the straight-strip values below usually beat them).
  for (const auto& [v, dv] : ring1)
    for (int tri : vertex_tris_[static_cast<std::size_t>(v)]) {
      const auto& t = mesh_->triangles[static_cast<std::size_t>(tri)];
      for (int k = 0; k < 3; ++k) {
        const int w = t[k];
        if (w == source || ring1.count(w)) continue;
        offer(w, dv + (verts[static_cast<std::size_t>(w)] -
                       verts[static_cast<std::size_t>(v)])
                          .norm());
      }
    }

  // Straight geodesics in unfolded triangle strips around the source
  // (depth-limited): exact where the true path stays inside the strip.
  // Angles are tracked per strip so only genuinely visible segments seed.
  struct Portal {
    Eigen::Vector2d a2, b2;
    int va, vb;
    int tri;  // triangle on the far side of (va, vb)
    double lo, hi;  // angular visibility window at the source
    int depth;
  };
  std::vector<Portal> stack;

  for (int tri : vertex_tris_[static_cast<std::size_t>(source)]) {
    const auto& t = mesh_->triangles[static_cast<std::size_t>(tri)];
    int a = -1, b = -1;
    for (int k = 0; k < 3; ++k)
      if (t[k] != source) (a < 0 ? a : b) = t[k];
    const Eigen::Vector3d& pa = verts[static_cast<std::size_t>(a)];
    const Eigen::Vector3d& pb = verts[static_cast<std::size_t>(b)];
    const double ra = (pa - ps).norm(), rb = (pb - ps).norm();
    if (!(ra > 0.0) || !(rb > 0.0)) continue;
    const double cos_ab =
        std::clamp((pa - ps).dot(pb - ps) / (ra * rb), -1.0, 1.0);
    const double ang = std::acos(cos_ab);
    const int across = neighbor_across(tri, a, b);
    if (across < 0) continue;
    stack.push_back({Eigen::Vector2d(ra, 0.0),
                     Eigen::Vector2d(rb * std::cos(ang), rb * std::sin(ang)),
                     a, b, across, 0.0, ang, 0});
  }

  while (!stack.empty()) {
    const Portal portal = stack.back();
    stack.pop_back();
    if (portal.depth >= 4 || portal.hi - portal.lo <= 1e-14) continue;

    const int w = third_vertex(portal.tri, portal.va, portal.vb);
    if (w < 0) continue;

    // Unfold w on the far side of the portal segment.
    const double l1 = (verts[static_cast<std::size_t>(w)] -
                       verts[static_cast<std::size_t>(portal.va)])
                          .norm();
    const double l2 = (verts[static_cast<std::size_t>(w)] -
                       verts[static_cast<std::size_t>(portal.vb)])
                          .norm();
    const Eigen::Vector2d seg = portal.b2 - portal.a2;
    const double seg_len = seg.norm();
    if (!(seg_len > 0.0)) continue;
    const Eigen::Vector2d seg_dir = seg / seg_len;
    const Eigen::Vector2d seg_normal(-seg_dir.y(), seg_dir.x());
    const double along =
        (l1 * l1 - l2 * l2 + seg_len * seg_len) / (2.0 * seg_len);
    const double off = std::sqrt(std::max(l1 * l1 - along * along, 0.0));
    const double origin_side =
        (-portal.a2).dot(seg_normal) >= 0.0 ? 1.0 : -1.0;
    const Eigen::Vector2d w2 =
        portal.a2 + along * seg_dir - origin_side * off * seg_normal;

    const double theta = std::atan2(w2.y(), w2.x());
    if (w != source && theta >= portal.lo && theta <= portal.hi)
      offer(w, w2.norm());

    // Recurse through the two sub-portals with clipped windows.
    const int tri_a = neighbor_across(portal.tri, portal.va, w);
    if (tri_a >= 0)
      stack.push_back({portal.a2, w2, portal.va, w, tri_a, portal.lo,
                       std::min(portal.hi, theta), portal.depth + 1});
    const int tri_b = neighbor_across(portal.tri, w, portal.vb);
    if (tri_b >= 0)
      stack.push_back({w2, portal.b2, w, portal.vb, tri_b,
                       std::max(portal.lo, theta), portal.hi,
                       portal.depth + 1});
  }

  return {seed.begin(), seed.end()};
}

DistanceField FastMarcher::run(int source) const {
  const int n = mesh_->n();
  if (source < 0 || source >= n)
    throw ValidationError("fast_march: source index out of range", {});

  std::vector<double> dist(static_cast<std::size_t>(n), kInf);
  std::vector<char> state(static_cast<std::size_t>(n), kFar);
  using HeapItem = std::pair<double, int>;
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;

  dist[static_cast<std::size_t>(source)] = 0.0;
  state[static_cast<std::size_t>(source)] = kTrial;
  heap.emplace(0.0, source);

  auto seeds = near_field_seeds(source);
  std::sort(seeds.begin(), seeds.end());
  for (const auto& [v, d] : seeds) {
    if (d < dist[static_cast<std::size_t>(v)]) {
      dist[static_cast<std::size_t>(v)] = d;
      state[static_cast<std::size_t>(v)] = kTrial;
      heap.emplace(d, v);
    }
  }

  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (state[static_cast<std::size_t>(u)] == kDead) continue;
    if (d > dist[static_cast<std::size_t>(u)]) continue;  // stale entry
    state[static_cast<std::size_t>(u)] = kDead;

    for (int tri : vertex_tris_[static_cast<std::size_t>(u)]) {
      const auto& t = mesh_->triangles[static_cast<std::size_t>(tri)];
      for (int k = 0; k < 3; ++k) {
        const int v = t[k];
        if (v == u || state[static_cast<std::size_t>(v)] == kDead) continue;
        const double cand = update_vertex(v, dist, state);
        if (cand < dist[static_cast<std::size_t>(v)]) {
          dist[static_cast<std::size_t>(v)] = cand;
          state[static_cast<std::size_t>(v)] = kTrial;
          heap.emplace(cand, v);
        }
      }
    }
  }

  for (int v = 0; v < n; ++v)
    if (!(dist[static_cast<std::size_t>(v)] < kInf))
      throw NumericalError("fast_march: vertex " + std::to_string(v) +
                           " unreachable from source " + std::to_string(source));

  DistanceField field;
  field.source = source;
  field.dist = Eigen::Map<Eigen::VectorXd>(dist.data(), n);
  return field;
}

DistanceField fast_march(const TriMesh& mesh, int source) {
  return FastMarcher(mesh).run(source);
}

std::vector<int> farthest_point_sample_count(const TriMesh& mesh, int count) {
  const int n = mesh.n();
  if (count < 2)
    throw ValidationError("farthest_point_sample: count must be >= 2", {});
  if (count > n)
    throw ValidationError("farthest_point_sample: count exceeds vertex count", {});

  const FastMarcher marcher(mesh);
  std::vector<int> samples;
  samples.reserve(static_cast<std::size_t>(count));
  samples.push_back(0);
  Eigen::VectorXd min_dist = marcher.run(0).dist;

  while (static_cast<int>(samples.size()) < count) {
    int best = 0;
    double best_val = min_dist[0];
    for (int i = 1; i < n; ++i)
      if (min_dist[i] > best_val) {  // strict: ties go to the lowest index
        best_val = min_dist[i];
        best = i;
      }
    samples.push_back(best);
    if (static_cast<int>(samples.size()) == count) break;
    min_dist = min_dist.cwiseMin(marcher.run(best).dist);
  }
  return samples;
}

std::vector<int> farthest_point_sample(const TriMesh& mesh, double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ValidationError("farthest_point_sample: fraction must be in (0, 1]",
                          {});
  const int count =
      std::max(2, static_cast<int>(std::floor(fraction * mesh.n())));
  return farthest_point_sample_count(mesh, count);
}

SampledDistances distance_matrix(const TriMesh& mesh,
                                 const std::vector<int>& indices, int threads) {
  const int m = static_cast<int>(indices.size());
  if (m < 1) throw ValidationError("distance_matrix: empty index set", {});
  for (int idx : indices)
    if (idx < 0 || idx >= mesh.n())
      throw ValidationError("distance_matrix: index out of range", {});

  const FastMarcher marcher(mesh);
  std::vector<Eigen::VectorXd> fields(static_cast<std::size_t>(m));
  parallel_for(static_cast<std::size_t>(m), threads,
               [&](std::size_t i) { fields[i] = marcher.run(indices[i]).dist; });

  SampledDistances out;
  out.indices = indices;
  out.mesh_hash = mesh_content_hash(mesh);
  Eigen::MatrixXd raw(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      raw(i, j) =
          fields[static_cast<std::size_t>(i)][indices[static_cast<std::size_t>(j)]];
  out.d = 0.5 * (raw + raw.transpose());

  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (!(out.d(i, j) > 0.0))
        throw NumericalError(
            "distance_matrix: non-positive off-diagonal distance between "
            "samples " + std::to_string(i) + " and " + std::to_string(j));
  return out;
}

}  // namespace sgmds
