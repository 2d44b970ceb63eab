#include "sgmds/fixtures.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "sgmds/errors.hpp"

namespace sgmds {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Fixed smooth radial modulation with no symmetry axis.
double bump_field(const Eigen::Vector3d& p, double amplitude) {
  const double x = p.x(), y = p.y(), z = p.z();
  return 1.0 + amplitude * (0.6 * std::sin(3.1 * x + 0.9) * std::cos(2.3 * y - 0.4) +
                            0.3 * std::sin(2.7 * z + 1.7 * x + 0.3) +
                            0.25 * std::cos(1.9 * y + 2.9 * z - 1.1));
}

void apply_radial_bumps(TriMesh& mesh, double amplitude) {
  for (auto& v : mesh.vertices) {
    const Eigen::Vector3d dir = v.normalized();
    v = dir * bump_field(dir, amplitude);
  }
}

}  // namespace

TriMesh make_icosphere(int level) {
  if (level < 0 || level > 6)
    throw ValidationError("icosphere level must be in [0, 6]", {});

  // Icosahedron.
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(verts.size());
      verts.push_back((verts[a] + verts[b]).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  TriMesh mesh{std::move(verts), std::move(faces)};
  validate_mesh(mesh);
  return mesh;
}

TriMesh make_bent_plane(int nx, int ny, double bend_angle) {
  if (nx < 2 || ny < 2)
    throw ValidationError("bent_plane needs nx, ny >= 2", {});

  TriMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nx) * ny);
  const int fold_col = (nx - 1) / 2;
  const double xf = static_cast<double>(fold_col);
  const double c = std::cos(bend_angle), s = std::sin(bend_angle);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double x = static_cast<double>(i), y = static_cast<double>(j), z = 0.0;
      if (x > xf) {
        const double d = x - xf;
        x = xf + d * c;
        z = d * s;
      }
      mesh.vertices.emplace_back(x, y, z);
    }
  }
  auto vid = [nx](int i, int j) { return j * nx + i; };
  // The cell diagonals follow a fixed aperiodic pattern. A uniform pattern
  // would leave the square grid with exact mesh automorphisms (diagonal
  // mirror, half turn), and a matching problem on such a mesh is only
  // determined up to that symmetry group.
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      if ((3 * i + 5 * j) % 7 < 4) {
        mesh.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
        mesh.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
      } else {
        mesh.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i, j + 1)});
        mesh.triangles.push_back({vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
      }
    }
  }
  validate_mesh(mesh);
  return mesh;
}

TriMesh make_bumpy_sphere(int level, double amplitude) {
  TriMesh mesh = make_icosphere(level);
  apply_radial_bumps(mesh, amplitude);
  validate_mesh(mesh);
  return mesh;
}

TriMesh make_bumpy_ring_sphere(int rings, int segments, double amplitude) {
  if (rings < 2 || segments < 3)
    throw ValidationError("ring sphere needs rings >= 2, segments >= 3", {});

  TriMesh mesh;
  const int north = 0;
  mesh.vertices.emplace_back(0, 0, 1);
  for (int r = 1; r <= rings; ++r) {
    const double theta = kPi * r / (rings + 1);
    for (int sgm = 0; sgm < segments; ++sgm) {
      const double phi = 2.0 * kPi * sgm / segments;
      mesh.vertices.emplace_back(std::sin(theta) * std::cos(phi),
                                 std::sin(theta) * std::sin(phi),
                                 std::cos(theta));
    }
  }
  const int south = static_cast<int>(mesh.vertices.size());
  mesh.vertices.emplace_back(0, 0, -1);

  auto ring_v = [segments](int r, int sgm) {
    return 1 + (r - 1) * segments + (sgm % segments);
  };
  for (int sgm = 0; sgm < segments; ++sgm)
    mesh.triangles.push_back({north, ring_v(1, sgm), ring_v(1, sgm + 1)});
  for (int r = 1; r < rings; ++r) {
    for (int sgm = 0; sgm < segments; ++sgm) {
      const int a = ring_v(r, sgm), b = ring_v(r, sgm + 1);
      const int c = ring_v(r + 1, sgm), d = ring_v(r + 1, sgm + 1);
      mesh.triangles.push_back({a, c, d});
      mesh.triangles.push_back({a, d, b});
    }
  }
  for (int sgm = 0; sgm < segments; ++sgm)
    mesh.triangles.push_back({south, ring_v(rings, sgm + 1), ring_v(rings, sgm)});

  apply_radial_bumps(mesh, amplitude);
  validate_mesh(mesh);
  return mesh;
}

PermutedCopy make_permuted_rigid_copy(const TriMesh& mesh, std::uint64_t seed) {
  const int n = mesh.n();
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::uint64_t state = seed;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(splitmix64(state) % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }

  // Fixed rigid motion: rotation about a skew axis plus translation.
  const Eigen::Vector3d axis = Eigen::Vector3d(0.3, -0.7, 0.648).normalized();
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(0.83, axis).toRotationMatrix();
  const Eigen::Vector3d shift(0.25, -1.5, 0.75);

  PermutedCopy out;
  out.perm = perm;
  out.mesh.vertices.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out.mesh.vertices[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
        rot * mesh.vertices[static_cast<std::size_t>(i)] + shift;
  out.mesh.triangles.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles)
    out.mesh.triangles.push_back({perm[static_cast<std::size_t>(t[0])],
                                  perm[static_cast<std::size_t>(t[1])],
                                  perm[static_cast<std::size_t>(t[2])]});
  validate_mesh(out.mesh);
  return out;
}

TriMesh generate_test_mesh(const FixtureSpec& spec) {
  switch (spec.kind) {
    case FixtureSpec::Kind::kIcosphere:
      return make_icosphere(spec.level);
    case FixtureSpec::Kind::kBentPlane:
      return make_bent_plane(spec.nx, spec.ny, spec.bend_angle);
    case FixtureSpec::Kind::kBumpySphere:
      return make_bumpy_sphere(spec.level);
    case FixtureSpec::Kind::kBumpyRingSphere:
      return make_bumpy_ring_sphere(spec.nx, spec.ny);
  }
  throw std::logic_error("unknown fixture kind");
}

}  // namespace sgmds
