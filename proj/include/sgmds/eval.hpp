#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sgmds/correspondence.hpp"
#include "sgmds/mesh.hpp"

namespace sgmds {

/// Cumulative accuracy curve: fraction of points whose sqrt(area)-normalized
/// geodesic deviation from ground truth is within each threshold.
struct DistortionCurve {
  std::vector<double> thresholds;  // increasing, starts at 0
  std::vector<double> fraction;    // non-decreasing, in [0, 1]
};

/// Per-vertex geodesic deviation on mesh2 between the mapped vertex and the
/// ground-truth vertex, normalized by sqrt(area of mesh2). One fast-marching
/// run per distinct ground-truth vertex, parallel across sources.
Eigen::VectorXd geodesic_errors(const PointMap& map,
                                const std::vector<int>& truth,
                                const TriMesh& mesh2, int threads = 1);

/// Empirical CDF of the errors at the given thresholds (inclusive).
DistortionCurve distortion_curve(const Eigen::VectorXd& errors,
                                 const std::vector<double>& thresholds);

/// Default threshold grid 0 : 0.0025 : 0.25.
std::vector<double> default_thresholds();

void save_curve_csv(const DistortionCurve& curve, const std::string& path);
/// Minimal standalone line plot of the curve.
void save_curve_svg(const DistortionCurve& curve, const std::string& path);

/// Ground truth: one target vertex index per line.
std::vector<int> load_truth_indices(const std::string& path);

}  // namespace sgmds
