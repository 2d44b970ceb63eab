#pragma once

#include <cstdint>
#include <vector>

#include "sgmds/mesh.hpp"

namespace sgmds {

/// Unit-radius geodesic sphere from a subdivided icosahedron.
/// n = 10 * 4^level + 2. level must be <= 6.
TriMesh make_icosphere(int level);

/// An nx-by-ny unit-spacing grid strip, isometrically folded along the
/// vertex column floor((nx-1)/2) by bend_angle. Edge lengths match the flat
/// strip exactly. nx, ny >= 2.
TriMesh make_bent_plane(int nx, int ny, double bend_angle);

/// Icosphere with a fixed smooth asymmetric radial modulation; has no
/// eigenvalue multiplicities, unlike the round sphere. Used as the
/// "asymmetric" self-test shape.
TriMesh make_bumpy_sphere(int level, double amplitude = 0.18);

/// Pole-capped ring sphere with rings*segments + 2 vertices and the same
/// asymmetric bumps; lets tests hit an exact vertex count
/// (e.g. rings=26, segments=167 -> n=4344).
TriMesh make_bumpy_ring_sphere(int rings, int segments,
                               double amplitude = 0.18);

/// Relabels vertices by a deterministic pseudo-random permutation and
/// applies a fixed rigid motion. perm[i] is the new index of old vertex i.
struct PermutedCopy {
  TriMesh mesh;
  std::vector<int> perm;
};
PermutedCopy make_permuted_rigid_copy(const TriMesh& mesh,
                                      std::uint64_t seed = 7u);

/// Named generator used by the CLI `gen-fixture` subcommand.
struct FixtureSpec {
  enum class Kind { kIcosphere, kBentPlane, kBumpySphere, kBumpyRingSphere };
  Kind kind = Kind::kIcosphere;
  int level = 3;       // icosphere / bumpy_sphere
  int nx = 10, ny = 10;  // bent_plane (also rings/segments)
  double bend_angle = 0.0;
};
TriMesh generate_test_mesh(const FixtureSpec& spec);

}  // namespace sgmds
