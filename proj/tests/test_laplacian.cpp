#include <cmath>

#include "doctest.h"
#include "sgmds/errors.hpp"
#include "sgmds/fixtures.hpp"
#include "sgmds/laplacian.hpp"
#include "test_support.hpp"

using namespace sgmds;

TEST_CASE("cotan_weights: single equilateral triangle") {
  TriMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0.5, std::sqrt(3.0) / 2.0, 0}};
  mesh.triangles = {{0, 1, 2}};
  const StiffnessMatrix w = cotan_weights(mesh);
  const double expected = -1.0 / (2.0 * std::sqrt(3.0));
  CHECK(w.w.coeff(0, 1) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(w.w.coeff(1, 2) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(w.w.coeff(0, 2) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cotan_weights: symmetry and zero row sums") {
  for (const TriMesh& mesh :
       {make_icosphere(2), make_bent_plane(9, 7, 0.4), make_bumpy_sphere(2)}) {
    const StiffnessMatrix w = cotan_weights(mesh);
    const Eigen::MatrixXd dense = Eigen::MatrixXd(w.w);
    CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const double scale = dense.cwiseAbs().maxCoeff();
    CHECK((dense.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-10 * scale);
  }
}

TEST_CASE("cotan_weights: Dirichlet energy of a linear function on a flat mesh") {
  // f(x,y) = 2x - y on a flat sheet: f'Wf = area * |grad f|^2 away from any
  // boundary effect -- exact for piecewise-linear FEM, any triangulation.
  const TriMesh mesh = make_bent_plane(12, 9, 0.0);
  const StiffnessMatrix w = cotan_weights(mesh);
  Eigen::VectorXd f(mesh.n());
  for (int i = 0; i < mesh.n(); ++i)
    f[i] = 2.0 * mesh.vertices[static_cast<std::size_t>(i)].x() -
           mesh.vertices[static_cast<std::size_t>(i)].y();
  const double energy = f.dot(w.w * f);
  const double expected = mesh.surface_area() * 5.0;  // |(2,-1)|^2 = 5
  CHECK(energy == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("cotan_weights: degenerate triangle rejected with its index") {
  TriMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0.5, 1e-12, 0}};
  mesh.triangles = {{0, 1, 2}};
  CHECK_THROWS_AS(cotan_weights(mesh), NumericalError);
}

TEST_CASE("eigenbasis: matches the dense oracle on a tiny full pencil") {
  const TriMesh mesh = make_bent_plane(10, 5, 0.3);  // n = 50
  REQUIRE(mesh.n() == 50);
  const StiffnessMatrix w = cotan_weights(mesh);
  const MassDiagonal a = vertex_areas(mesh);
  const EigenBasis basis = eigenbasis(w, a, 50);

  const auto oracle =
      test::dense_generalized_eig(Eigen::MatrixXd(w.w), a.a);
  for (int k = 0; k < 50; ++k)
    CHECK(basis.lambda[k] == doctest::Approx(oracle.lambda[k]).epsilon(1e-6));
}

TEST_CASE("eigenbasis: constant kernel eigenfunction") {
  const TriMesh mesh = make_bumpy_sphere(2);
  const EigenBasis basis = eigenbasis_of_mesh(mesh, 2);
  CHECK(std::abs(basis.lambda[0]) < 1e-8 * basis.lambda[1]);
  const double expected = 1.0 / std::sqrt(basis.mass.total_area);
  for (int i = 0; i < mesh.n(); ++i)
    CHECK(basis.phi(i, 0) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("eigenbasis: invariants across fixtures") {
  for (const TriMesh& mesh :
       {make_icosphere(2), make_bent_plane(11, 8, 0.9), make_bumpy_sphere(2)}) {
    const StiffnessMatrix w = cotan_weights(mesh);
    const MassDiagonal a = vertex_areas(mesh);
    const int M = 24;
    const EigenBasis basis = eigenbasis(w, a, M);

    // A-orthonormality.
    const Eigen::MatrixXd gram =
        basis.phi.transpose() * a.a.asDiagonal() * basis.phi;
    CHECK((gram - Eigen::MatrixXd::Identity(M, M)).cwiseAbs().maxCoeff() <
          1e-8);

    // Per-column eigen-residual relative to |W|.
    const double wscale = Eigen::MatrixXd(w.w).cwiseAbs().rowwise().sum().maxCoeff();
    for (int k = 0; k < M; ++k) {
      const Eigen::VectorXd r =
          w.w * basis.phi.col(k) -
          basis.lambda[k] * a.a.cwiseProduct(basis.phi.col(k));
      CHECK(r.norm() < 1e-7 * wscale);
    }

    // Ascending eigenvalues, nonnegative.
    for (int k = 0; k + 1 < M; ++k) CHECK(basis.lambda[k] <= basis.lambda[k + 1]);
    CHECK(basis.lambda[0] >= 0.0);

    // Sign convention: largest-magnitude entry positive.
    for (int k = 0; k < M; ++k) {
      int arg = 0;
      for (int i = 1; i < mesh.n(); ++i)
        if (std::abs(basis.phi(i, k)) > std::abs(basis.phi(arg, k))) arg = i;
      CHECK(basis.phi(arg, k) > 0.0);
    }
  }
}

TEST_CASE("eigenbasis: sphere spectrum clusters near k(k+1)") {
  const TriMesh mesh = make_icosphere(3);
  const EigenBasis basis = eigenbasis_of_mesh(mesh, 10);
  for (int k = 1; k <= 3; ++k)
    CHECK(basis.lambda[k] == doctest::Approx(2.0).epsilon(0.03));
  for (int k = 4; k <= 8; ++k)
    CHECK(basis.lambda[k] == doctest::Approx(6.0).epsilon(0.03));
}

TEST_CASE("eigenbasis: spectrum invariant under rigid motion") {
  const TriMesh mesh = make_bumpy_sphere(2);
  TriMesh moved = mesh;
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(1.1, Eigen::Vector3d(1, 2, -1).normalized())
          .toRotationMatrix();
  for (auto& v : moved.vertices) v = rot * v + Eigen::Vector3d(3, -4, 0.5);

  const EigenBasis b0 = eigenbasis_of_mesh(mesh, 16);
  const EigenBasis b1 = eigenbasis_of_mesh(moved, 16);
  for (int k = 1; k < 16; ++k)
    CHECK(b1.lambda[k] == doctest::Approx(b0.lambda[k]).epsilon(1e-9));
}

TEST_CASE("eigenbasis: M bounds enforced") {
  const TriMesh mesh = make_icosphere(1);
  const StiffnessMatrix w = cotan_weights(mesh);
  const MassDiagonal a = vertex_areas(mesh);
  CHECK_THROWS_AS(eigenbasis(w, a, 1), ValidationError);
  CHECK_THROWS_AS(eigenbasis(w, a, mesh.n() + 1), ValidationError);
}
