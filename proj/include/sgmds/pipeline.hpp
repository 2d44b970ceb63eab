#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "sgmds/correspondence.hpp"
#include "sgmds/eval.hpp"
#include "sgmds/geodesics.hpp"
#include "sgmds/mesh.hpp"
#include "sgmds/sgmds.hpp"
#include "sgmds/spectral_interp.hpp"

namespace sgmds {

/// Knobs shared by the pipeline commands. Cached artifacts are reused when
/// their recorded upstream hashes still match; anything stale or corrupted
/// is recomputed (with a warning).
struct PipelineOptions {
  int eigen_count = 100;
  double sample_fraction = 0.05;
  double interp_mu = -1.0;  // < 0: scale-aware default
  AreaScheme area_scheme = AreaScheme::kMixedVoronoi;
  int threads = 1;
  std::string cache_dir = ".";
  bool force = false;  // recompute everything
  bool area_weighted_nn = false;
  SolverConfig solver;
};

struct StageSeconds {
  double lb_eigs = 0.0;
  double geodesics = 0.0;  // sampling + distance matrix
  double interp = 0.0;
  bool from_cache = false;
};

/// Per-shape precomputed artifacts plus provenance and timing.
struct ShapeArtifacts {
  std::string mesh_path;
  std::uint64_t mesh_hash = 0;
  TriMesh mesh;
  EigenBasis basis;
  SampledDistances samples;
  SpectralDistance spectral;
  StageSeconds seconds;
  std::string basis_file, distances_file, spectral_file;
};

/// Runs (or loads) eigenbasis, farthest-point samples + distances, and the
/// spectral interpolation for one mesh. Progress lines go to `log` if given.
ShapeArtifacts precompute_shape(const std::string& mesh_path,
                                const PipelineOptions& opts,
                                std::ostream* log = nullptr);

/// Loads previously cached artifacts without recomputing; throws CacheError
/// when anything is missing or stale.
ShapeArtifacts load_shape_artifacts(const std::string& mesh_path,
                                    const PipelineOptions& opts);

struct MatchOutput {
  FunctionalMapCoeffs coeffs;
  PointMap map;
  double solve_seconds = 0.0;
  double extract_seconds = 0.0;
};

/// Solves the matching problem between two precomputed shapes and recovers
/// the dense point map.
MatchOutput match_shapes(const ShapeArtifacts& shape1,
                         const ShapeArtifacts& shape2,
                         const PipelineOptions& opts,
                         std::ostream* log = nullptr);

/// Writes alpha.bin / alpha.txt / pointmap.txt / diagnostics.json into
/// out_dir; the diagnostics JSON carries dimensions, weights, residuals and
/// the objective history (no wall-clock values, outputs stay reproducible).
void write_match_outputs(const MatchOutput& match, const ShapeArtifacts& shape1,
                         const ShapeArtifacts& shape2,
                         const PipelineOptions& opts,
                         const std::string& out_dir);

/// Stage-timing table in the fixed three-row layout
/// (LB + eigs / Spectral GMDS / Total).
std::string format_timing_table(const ShapeArtifacts& s1,
                                const ShapeArtifacts& s2,
                                const MatchOutput& match);

}  // namespace sgmds
