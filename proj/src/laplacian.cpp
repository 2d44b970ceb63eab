#include "sgmds/laplacian.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "sgmds/errors.hpp"

namespace sgmds {

StiffnessMatrix cotan_weights(const TriMesh& mesh) {
  const int n = mesh.n();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.m()) * 12);

  for (int t = 0; t < mesh.m(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const Eigen::Vector3d& p0 = mesh.vertices[tri[0]];
    const Eigen::Vector3d& p1 = mesh.vertices[tri[1]];
    const Eigen::Vector3d& p2 = mesh.vertices[tri[2]];
    const double area = mesh.triangle_area(t);
    const double inv2a = 1.0 / (2.0 * area);

    // cot of the angle opposite each edge; edge k connects the other two
    // corners.
    const Eigen::Vector3d e01 = p1 - p0, e02 = p2 - p0, e12 = p2 - p1;
    const double cot0 = e01.dot(e02) * inv2a;     // opposite edge (1,2)
    const double cot1 = (-e01).dot(e12) * inv2a;  // opposite edge (0,2)
    const double cot2 = e02.dot(e12) * inv2a;     // opposite edge (0,1)

    const double worst =
        std::max({std::abs(cot0), std::abs(cot1), std::abs(cot2)});
    if (!(worst <= 1e8))
      throw NumericalError("cotan_weights: near-degenerate triangle " +
                           std::to_string(t) + " (|cot| = " +
                           std::to_string(worst) + ")");

    const int i0 = tri[0], i1 = tri[1], i2 = tri[2];
    auto add_edge = [&triplets](int a, int b, double cot) {
      const double w = -0.5 * cot;
      triplets.emplace_back(a, b, w);
      triplets.emplace_back(b, a, w);
    };
    add_edge(i1, i2, cot0);
    add_edge(i0, i2, cot1);
    add_edge(i0, i1, cot2);
  }

  Eigen::SparseMatrix<double> off(n, n);
  off.setFromTriplets(triplets.begin(), triplets.end());

  // Diagonal = negated row sum of the off-diagonal part, so rows sum to zero
  // exactly as stored.
  Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < off.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(off, k); it; ++it)
      rowsum[it.row()] += it.value();

  StiffnessMatrix result;
  Eigen::SparseMatrix<double> diag(n, n);
  std::vector<Eigen::Triplet<double>> dtrip;
  dtrip.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) dtrip.emplace_back(i, i, -rowsum[i]);
  diag.setFromTriplets(dtrip.begin(), dtrip.end());
  result.w = off + diag;
  result.w.makeCompressed();
  return result;
}

EigenBasis eigenbasis_of_mesh(const TriMesh& mesh, int M, AreaScheme scheme,
                              const EigenOptions& opts) {
  const StiffnessMatrix w = cotan_weights(mesh);
  const MassDiagonal a = vertex_areas(mesh, scheme);
  return eigenbasis(w, a, M, opts);
}

}  // namespace sgmds
