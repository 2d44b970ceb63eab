#include <cmath>
#include <set>

#include "doctest.h"
#include "sgmds/errors.hpp"
#include "sgmds/fixtures.hpp"
#include "sgmds/geodesics.hpp"
#include "test_support.hpp"

using namespace sgmds;

TEST_CASE("fast_march: flat grid matches the Euclidean oracle within 2%") {
  const TriMesh grid = make_bent_plane(50, 50, 0.0);
  const int source = 0;  // corner
  const DistanceField field = fast_march(grid, source);
  const Eigen::Vector3d src = grid.vertices[static_cast<std::size_t>(source)];
  double worst = 0.0;
  for (int i = 0; i < grid.n(); ++i) {
    if (i == source) {
      CHECK(field.dist[i] == 0.0);
      continue;
    }
    const double exact = (grid.vertices[static_cast<std::size_t>(i)] - src).norm();
    worst = std::max(worst, std::abs(field.dist[i] - exact) / exact);
  }
  CHECK(worst <= 0.02);
}

TEST_CASE("fast_march: icosphere matches great-circle arcs within 5%") {
  const TriMesh sphere = make_icosphere(4);
  const int source = 17;
  const DistanceField field = fast_march(sphere, source);
  const Eigen::Vector3d src = sphere.vertices[static_cast<std::size_t>(source)];
  double worst = 0.0;
  for (int i = 0; i < sphere.n(); ++i) {
    if (i == source) continue;
    const double dot =
        std::clamp(src.dot(sphere.vertices[static_cast<std::size_t>(i)]), -1.0, 1.0);
    const double exact = std::acos(dot);
    worst = std::max(worst, std::abs(field.dist[i] - exact) / exact);
  }
  CHECK(worst <= 0.05);
}

TEST_CASE("fast_march: never exceeds the Dijkstra oracle") {
  for (const TriMesh& mesh :
       {make_icosphere(3), make_bent_plane(20, 20, 1.0), make_bumpy_sphere(2)}) {
    for (int source : {0, mesh.n() / 2}) {
      const DistanceField field = fast_march(mesh, source);
      const Eigen::VectorXd dij = test::dijkstra_distances(mesh, source);
      for (int i = 0; i < mesh.n(); ++i)
        CHECK(field.dist[i] <= dij[i] + 1e-9);
    }
  }
}

TEST_CASE("fast_march: directed asymmetry stays within 5%") {
  const TriMesh mesh = make_bumpy_sphere(2);
  const int a = 3, b = 120;
  const double dab = fast_march(mesh, a).dist[b];
  const double dba = fast_march(mesh, b).dist[a];
  CHECK(std::abs(dab - dba) / std::max(dab, 1e-12) <= 0.05);
}

TEST_CASE("fast_march: permutation-equivariant") {
  const TriMesh mesh = make_bumpy_sphere(1);
  // Pure relabeling (no rigid motion) so per-triangle arithmetic is
  // bit-identical.
  const auto copy = make_permuted_rigid_copy(mesh, 11);
  TriMesh relabeled = copy.mesh;
  for (int i = 0; i < mesh.n(); ++i)
    relabeled.vertices[static_cast<std::size_t>(copy.perm[static_cast<std::size_t>(i)])] =
        mesh.vertices[static_cast<std::size_t>(i)];

  const int source = 5;
  const DistanceField f1 = fast_march(mesh, source);
  const DistanceField f2 =
      fast_march(relabeled, copy.perm[static_cast<std::size_t>(source)]);
  for (int i = 0; i < mesh.n(); ++i)
    CHECK(f2.dist[copy.perm[static_cast<std::size_t>(i)]] ==
          doctest::Approx(f1.dist[i]).epsilon(1e-12));
}

TEST_CASE("fast_march: accepted front is monotone (spot check via sorting)") {
  const TriMesh mesh = make_icosphere(2);
  const DistanceField field = fast_march(mesh, 0);
  // All distances finite and nonnegative; source zero.
  CHECK(field.dist.minCoeff() == 0.0);
  CHECK(field.dist[0] == 0.0);
  CHECK(field.dist.maxCoeff() < std::numeric_limits<double>::infinity());
}

TEST_CASE("farthest_point_sample: fractions reproduce published counts") {
  const TriMesh mesh = make_icosphere(3);  // n = 642
  const auto samples = farthest_point_sample(mesh, 0.05);
  CHECK(samples.size() == 32);  // floor(0.05 * 642)
  // Deterministic repeat.
  CHECK(farthest_point_sample(mesh, 0.05) == samples);
  // Distinct indices.
  const std::set<int> uniq(samples.begin(), samples.end());
  CHECK(uniq.size() == samples.size());
}

TEST_CASE("farthest_point_sample: count 2 on a strip picks far endpoints") {
  const TriMesh strip = make_bent_plane(30, 2, 0.0);
  const auto samples = farthest_point_sample_count(strip, 2);
  REQUIRE(samples.size() == 2);
  CHECK(samples[0] == 0);
  // Farthest vertex from the corner seed is the opposite corner.
  const DistanceField field = fast_march(strip, 0);
  int arg = 0;
  for (int i = 1; i < strip.n(); ++i)
    if (field.dist[i] > field.dist[arg]) arg = i;
  CHECK(samples[1] == arg);
}

TEST_CASE("farthest_point_sample: covering radius non-increasing") {
  const TriMesh mesh = make_icosphere(2);
  const FastMarcher marcher(mesh);
  double prev = std::numeric_limits<double>::infinity();
  for (int count : {4, 8, 16, 32}) {
    const auto samples = farthest_point_sample_count(mesh, count);
    Eigen::VectorXd min_dist =
        Eigen::VectorXd::Constant(mesh.n(), std::numeric_limits<double>::infinity());
    for (int s : samples) min_dist = min_dist.cwiseMin(marcher.run(s).dist);
    const double radius = min_dist.maxCoeff();
    CHECK(radius <= prev + 1e-12);
    prev = radius;
  }
}

TEST_CASE("distance_matrix: symmetric, zero diagonal, positive off-diagonal") {
  const TriMesh mesh = make_icosphere(2);
  const auto samples = farthest_point_sample_count(mesh, 12);
  const SampledDistances sd = distance_matrix(mesh, samples);
  CHECK((sd.d - sd.d.transpose()).cwiseAbs().maxCoeff() < 1e-9);
  for (int i = 0; i < 12; ++i) CHECK(sd.d(i, i) == 0.0);
  for (int i = 0; i < 12; ++i)
    for (int j = i + 1; j < 12; ++j) CHECK(sd.d(i, j) > 0.0);
  CHECK(sd.mesh_hash == mesh_content_hash(mesh));
}

TEST_CASE("distance_matrix: single index gives the 1x1 zero matrix") {
  const TriMesh mesh = make_icosphere(1);
  const SampledDistances sd = distance_matrix(mesh, {7});
  REQUIRE(sd.d.rows() == 1);
  CHECK(sd.d(0, 0) == 0.0);
}

TEST_CASE("distance_matrix: sphere diameter bound") {
  const TriMesh mesh = make_icosphere(3);
  const auto samples = farthest_point_sample_count(mesh, 32);
  const SampledDistances sd = distance_matrix(mesh, samples);
  CHECK(sd.d.maxCoeff() <= M_PI * 1.05);
}

TEST_CASE("distance_matrix: flat grid corners match Euclidean within 2%") {
  const TriMesh grid = make_bent_plane(20, 20, 0.0);
  const std::vector<int> corners = {0, 19, 380, 399};
  const SampledDistances sd = distance_matrix(grid, corners);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (i == j) continue;
      const double exact = (grid.vertices[static_cast<std::size_t>(corners[i])] -
                            grid.vertices[static_cast<std::size_t>(corners[j])])
                               .norm();
      CHECK(sd.d(i, j) == doctest::Approx(exact).epsilon(0.02));
    }
}

TEST_CASE("distance_matrix: thread count does not change the result") {
  const TriMesh mesh = make_icosphere(2);
  const auto samples = farthest_point_sample_count(mesh, 10);
  const SampledDistances s1 = distance_matrix(mesh, samples, 1);
  const SampledDistances s4 = distance_matrix(mesh, samples, 4);
  CHECK((s1.d - s4.d).cwiseAbs().maxCoeff() == 0.0);
}
