#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sgmds/cache.hpp"
#include "sgmds/correspondence.hpp"
#include "sgmds/errors.hpp"
#include "sgmds/fixtures.hpp"
#include "sgmds/geodesics.hpp"
#include "sgmds/laplacian.hpp"
#include "sgmds/spectral_interp.hpp"
#include "test_support.hpp"

using namespace sgmds;
namespace fs = std::filesystem;

namespace {
std::string tmp(const char* leaf) {
  return (fs::temp_directory_path() / leaf).string();
}
}  // namespace

TEST_CASE("eigenbasis cache: round trip and hash rejection") {
  const TriMesh mesh = make_bumpy_sphere(1);
  const std::uint64_t hash = mesh_content_hash(mesh);
  const EigenBasis basis = eigenbasis_of_mesh(mesh, 10);

  const std::string path = tmp("sgmds_cache.eig");
  save_eigenbasis_cache(basis, hash, path);
  const EigenBasis back = load_eigenbasis_cache(path, hash);
  CHECK(back.M == basis.M);
  CHECK((back.phi - basis.phi).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.lambda - basis.lambda).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.mass.a - basis.mass.a).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.mass.total_area == basis.mass.total_area);

  CHECK_THROWS_AS(load_eigenbasis_cache(path, hash + 1), CacheError);

  // Truncation is rejected, not misread.
  fs::resize_file(path, 64);
  CHECK_THROWS_AS(load_eigenbasis_cache(path, hash), CacheError);
}

TEST_CASE("distance and spectral caches: round trip and kind checks") {
  const TriMesh mesh = make_bumpy_sphere(1);
  const EigenBasis basis = eigenbasis_of_mesh(mesh, 8);
  const auto samples = farthest_point_sample_count(mesh, 6);
  const SampledDistances sd = distance_matrix(mesh, samples);
  const SpectralDistance spd = interpolate_distances(basis, sd, 100.0);

  const std::string dpath = tmp("sgmds_cache.dist");
  save_distances_cache(sd, dpath);
  const SampledDistances dback = load_distances_cache(dpath, sd.mesh_hash);
  CHECK(dback.indices == sd.indices);
  CHECK((dback.d - sd.d).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(load_distances_cache(dpath, sd.mesh_hash ^ 1), CacheError);

  const std::string spath = tmp("sgmds_cache.spd");
  save_spectral_cache(spd, spath);
  const SpectralDistance sback = load_spectral_cache(spath, spd.basis_hash);
  CHECK((sback.alpha - spd.alpha).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sback.mu == spd.mu);
  CHECK(sback.fit_rms == spd.fit_rms);

  // A file of the wrong payload kind is rejected.
  CHECK_THROWS_AS(load_distances_cache(spath, spd.basis_hash), CacheError);
}

TEST_CASE("matrix container: round trip, text form parses") {
  test::DetRng rng(5);
  const Eigen::MatrixXd m = rng.matrix(7, 3);
  const std::string path = tmp("sgmds_cache.mat");
  save_matrix_binary(m, path);
  const Eigen::MatrixXd back = load_matrix_binary(path);
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);

  save_matrix_text(m, tmp("sgmds_cache.txt"));
  std::ifstream in(tmp("sgmds_cache.txt"));
  int lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 7);
}

TEST_CASE("fast_march: reports unreachable vertices on raw disconnected input") {
  // validate_mesh rejects disconnected meshes, but the fields are public;
  // the solver still fails loudly on a hand-built bad input.
  TriMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0},
                   {5, 5, 5}, {6, 5, 5}, {5, 6, 5}};
  mesh.triangles = {{0, 1, 2}, {3, 4, 5}};
  CHECK_THROWS_AS(fast_march(mesh, 0), NumericalError);
}

TEST_CASE("dense map materialization: correct and size-guarded") {
  const TriMesh mesh = make_bumpy_sphere(1);
  const EigenBasis basis = eigenbasis_of_mesh(mesh, 12);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(12, 12);
  const Eigen::MatrixXd k = materialize_dense_map(id, basis, basis);
  // K acts like the spectral projector: K * f reproduces spanned functions.
  test::DetRng rng(9);
  const Eigen::VectorXd f = basis.phi * rng.matrix(12, 1);
  CHECK(((k * f) - f).cwiseAbs().maxCoeff() < 1e-9);

  EigenBasis big = basis;  // fake a vertex count that would blow the guard
  big.phi.conservativeResize(4000, 12);
  CHECK_THROWS_AS(materialize_dense_map(id, big, big), ValidationError);
}
