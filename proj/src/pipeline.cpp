#include "sgmds/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "sgmds/cache.hpp"
#include "sgmds/errors.hpp"

namespace sgmds {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string mu_tag(double mu) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", mu);
  std::string s = buf;
  for (char& c : s) {
    if (c == '.') c = 'p';
    if (c == '+') c = 'x';
    if (c == '-') c = 'm';
  }
  return s;
}

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

void log_line(std::ostream* log, const std::string& line) {
  if (log) *log << line << "\n";
}

// Cache-dir manifest: one JSON object per artifact file with its upstream
// hash, parameters, a timestamp, and the stage wall time. Purely
// bookkeeping; loaders rely on the hashes embedded in the cache files.
double manifest_seconds(const std::string& cache_dir,
                        const std::string& artifact) {
  const fs::path path = fs::path(cache_dir) / "sgmds-manifest.json";
  std::ifstream in(path);
  if (!in) return 0.0;
  try {
    json manifest;
    in >> manifest;
    if (manifest.contains(artifact) && manifest[artifact].contains("seconds"))
      return manifest[artifact]["seconds"].get<double>();
  } catch (...) {
  }
  return 0.0;
}

void manifest_record(const std::string& cache_dir, const std::string& artifact,
                     const json& record) {
  const fs::path path = fs::path(cache_dir) / "sgmds-manifest.json";
  json manifest = json::object();
  {
    std::ifstream in(path);
    if (in) {
      try {
        in >> manifest;
      } catch (...) {
        manifest = json::object();
      }
    }
  }
  manifest[artifact] = record;
  std::ofstream out(path, std::ios::trunc);
  out << manifest.dump(2) << "\n";
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc;
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

int sample_count_for(const TriMesh& mesh, double fraction) {
  return std::max(2, static_cast<int>(std::floor(fraction * mesh.n())));
}

}  // namespace

ShapeArtifacts precompute_shape(const std::string& mesh_path,
                                const PipelineOptions& opts, std::ostream* log) {
  ShapeArtifacts art;
  art.mesh_path = mesh_path;
  std::vector<std::string> warnings;
  art.mesh = load_mesh(mesh_path, &warnings);
  for (const auto& w : warnings) log_line(log, "warning: " + w);
  art.mesh_hash = mesh_content_hash(art.mesh);

  fs::create_directories(opts.cache_dir);
  const std::string stem = stem_of(mesh_path);
  const std::string tag = stem + "." + hash_hex(art.mesh_hash);
  const int m_samples = sample_count_for(art.mesh, opts.sample_fraction);
  art.basis_file = (fs::path(opts.cache_dir) /
                    (tag + ".M" + std::to_string(opts.eigen_count) + ".eig"))
                       .string();
  art.distances_file = (fs::path(opts.cache_dir) /
                        (tag + ".s" + std::to_string(m_samples) + ".dist"))
                           .string();

  // Eigenbasis stage.
  bool basis_cached = false;
  if (!opts.force && fs::exists(art.basis_file)) {
    try {
      auto start = std::chrono::steady_clock::now();
      art.basis = load_eigenbasis_cache(art.basis_file, art.mesh_hash);
      if (art.basis.M != opts.eigen_count) throw CacheError("different M");
      art.seconds.lb_eigs = seconds_since(start);
      basis_cached = true;
      log_line(log, "[" + stem + "] LB + eigs: cached");
    } catch (const CacheError& e) {
      log_line(log, std::string("warning: stale or corrupted cache (") +
                        e.what() + "), recomputing");
    }
  }
  if (!basis_cached) {
    auto start = std::chrono::steady_clock::now();
    art.basis = eigenbasis_of_mesh(art.mesh, opts.eigen_count, opts.area_scheme);
    art.seconds.lb_eigs = seconds_since(start);
    save_eigenbasis_cache(art.basis, art.mesh_hash, art.basis_file);
    manifest_record(opts.cache_dir, fs::path(art.basis_file).filename().string(),
                    {{"mesh", mesh_path},
                     {"mesh_hash", hash_hex(art.mesh_hash)},
                     {"M", opts.eigen_count},
                     {"seconds", art.seconds.lb_eigs},
                     {"written", timestamp_utc()}});
    char line[128];
    std::snprintf(line, sizeof line, "[%s] LB + eigs: %.2f s", stem.c_str(),
                  art.seconds.lb_eigs);
    log_line(log, line);
  }

  // Geodesic sampling stage.
  bool dist_cached = false;
  if (!opts.force && fs::exists(art.distances_file)) {
    try {
      art.samples = load_distances_cache(art.distances_file, art.mesh_hash);
      if (static_cast<int>(art.samples.indices.size()) != m_samples)
        throw CacheError("different sample count");
      dist_cached = true;
      log_line(log, "[" + stem + "] geodesic samples: cached");
    } catch (const CacheError& e) {
      log_line(log, std::string("warning: stale or corrupted cache (") +
                        e.what() + "), recomputing");
    }
  }
  if (!dist_cached) {
    auto start = std::chrono::steady_clock::now();
    const auto indices = farthest_point_sample_count(art.mesh, m_samples);
    art.samples = distance_matrix(art.mesh, indices, opts.threads);
    art.seconds.geodesics = seconds_since(start);
    save_distances_cache(art.samples, art.distances_file);
    manifest_record(
        opts.cache_dir, fs::path(art.distances_file).filename().string(),
        {{"mesh", mesh_path},
         {"mesh_hash", hash_hex(art.mesh_hash)},
         {"samples", m_samples},
         {"seconds", art.seconds.geodesics},
         {"written", timestamp_utc()}});
    char line[128];
    std::snprintf(line, sizeof line, "[%s] FPS + geodesics (%d samples): %.2f s",
                  stem.c_str(), m_samples, art.seconds.geodesics);
    log_line(log, line);
  }

  // Spectral interpolation stage.
  const double mu = opts.interp_mu > 0.0
                        ? opts.interp_mu
                        : default_interp_mu(art.basis, art.samples);
  const std::uint64_t basis_hash = eigenbasis_content_hash(art.basis);
  art.spectral_file =
      (fs::path(opts.cache_dir) /
       (tag + ".M" + std::to_string(opts.eigen_count) + ".s" +
        std::to_string(m_samples) + ".mu" + mu_tag(mu) + ".spd"))
          .string();
  bool spectral_cached = false;
  if (!opts.force && fs::exists(art.spectral_file)) {
    try {
      art.spectral = load_spectral_cache(art.spectral_file, basis_hash);
      spectral_cached = true;
      log_line(log, "[" + stem + "] spectral interpolation: cached");
    } catch (const CacheError& e) {
      log_line(log, std::string("warning: stale or corrupted cache (") +
                        e.what() + "), recomputing");
    }
  }
  if (!spectral_cached) {
    auto start = std::chrono::steady_clock::now();
    art.spectral = interpolate_distances(art.basis, art.samples, mu);
    art.seconds.interp = seconds_since(start);
    save_spectral_cache(art.spectral, art.spectral_file);
    manifest_record(
        opts.cache_dir, fs::path(art.spectral_file).filename().string(),
        {{"mesh", mesh_path},
         {"basis_hash", hash_hex(basis_hash)},
         {"mu", mu},
         {"fit_rms", art.spectral.fit_rms},
         {"seconds", art.seconds.interp},
         {"written", timestamp_utc()}});
    char line[160];
    std::snprintf(line, sizeof line,
                  "[%s] spectral interpolation: %.2f s (fit rms %.3g)",
                  stem.c_str(), art.seconds.interp, art.spectral.fit_rms);
    log_line(log, line);
  }
  art.seconds.from_cache = basis_cached && dist_cached && spectral_cached;
  return art;
}

ShapeArtifacts load_shape_artifacts(const std::string& mesh_path,
                                    const PipelineOptions& opts) {
  ShapeArtifacts art;
  art.mesh_path = mesh_path;
  art.mesh = load_mesh(mesh_path);
  art.mesh_hash = mesh_content_hash(art.mesh);
  const std::string tag = stem_of(mesh_path) + "." + hash_hex(art.mesh_hash);
  const int m_samples = sample_count_for(art.mesh, opts.sample_fraction);

  art.basis_file = (fs::path(opts.cache_dir) /
                    (tag + ".M" + std::to_string(opts.eigen_count) + ".eig"))
                       .string();
  if (!fs::exists(art.basis_file))
    throw CacheError("missing eigenbasis cache " + art.basis_file +
                     " (run precompute first)");
  art.basis = load_eigenbasis_cache(art.basis_file, art.mesh_hash);
  if (art.basis.M != opts.eigen_count)
    throw CacheError("eigenbasis cache has different M: " + art.basis_file);

  art.distances_file = (fs::path(opts.cache_dir) /
                        (tag + ".s" + std::to_string(m_samples) + ".dist"))
                           .string();
  if (!fs::exists(art.distances_file))
    throw CacheError("missing distance cache " + art.distances_file);
  art.samples = load_distances_cache(art.distances_file, art.mesh_hash);

  const double mu = opts.interp_mu > 0.0
                        ? opts.interp_mu
                        : default_interp_mu(art.basis, art.samples);
  art.spectral_file =
      (fs::path(opts.cache_dir) /
       (tag + ".M" + std::to_string(opts.eigen_count) + ".s" +
        std::to_string(m_samples) + ".mu" + mu_tag(mu) + ".spd"))
          .string();
  if (!fs::exists(art.spectral_file))
    throw CacheError("missing spectral cache " + art.spectral_file);
  art.spectral =
      load_spectral_cache(art.spectral_file, eigenbasis_content_hash(art.basis));
  art.seconds.from_cache = true;
  // Original stage times for the timing table.
  art.seconds.lb_eigs = manifest_seconds(
      opts.cache_dir, fs::path(art.basis_file).filename().string());
  art.seconds.geodesics = manifest_seconds(
      opts.cache_dir, fs::path(art.distances_file).filename().string());
  art.seconds.interp = manifest_seconds(
      opts.cache_dir, fs::path(art.spectral_file).filename().string());
  return art;
}

MatchOutput match_shapes(const ShapeArtifacts& shape1,
                         const ShapeArtifacts& shape2,
                         const PipelineOptions& opts, std::ostream* log) {
  if (shape1.basis.M != shape2.basis.M)
    throw ValidationError(
        "match: eigenbasis truncation differs between shapes (" +
            std::to_string(shape1.basis.M) + " vs " +
            std::to_string(shape2.basis.M) + ")",
        {});

  MatchOutput out;
  auto start = std::chrono::steady_clock::now();
  const SgmdsProblem problem =
      make_problem(shape1.spectral, shape1.basis, shape2.spectral, shape2.basis,
                   opts.solver.mu1, opts.solver.mu2);
  out.coeffs = solve(problem, opts.solver);
  out.solve_seconds = seconds_since(start);
  if (log) {
    char line[160];
    std::snprintf(line, sizeof line,
                  "solve: %.2f s (objective %.3g, constraint %.3g, %s)",
                  out.solve_seconds,
                  out.coeffs.objective_history.empty()
                      ? 0.0
                      : out.coeffs.objective_history.back(),
                  out.coeffs.constraint_residual,
                  out.coeffs.converged ? "converged" : "NOT converged");
    log_line(log, line);
  }

  start = std::chrono::steady_clock::now();
  out.map = extract_point_map(out.coeffs.alpha, shape1.basis, shape2.basis,
                              opts.threads, opts.area_weighted_nn);
  out.extract_seconds = seconds_since(start);
  return out;
}

void write_match_outputs(const MatchOutput& match, const ShapeArtifacts& shape1,
                         const ShapeArtifacts& shape2,
                         const PipelineOptions& opts,
                         const std::string& out_dir) {
  fs::create_directories(out_dir);
  save_matrix_binary(match.coeffs.alpha,
                     (fs::path(out_dir) / "alpha.bin").string());
  save_matrix_text(match.coeffs.alpha,
                   (fs::path(out_dir) / "alpha.txt").string());
  save_point_map(match.map, (fs::path(out_dir) / "pointmap.txt").string());

  json diag;
  diag["shape1"] = {{"path", shape1.mesh_path},
                    {"n", shape1.mesh.n()},
                    {"mesh_hash", hash_hex(shape1.mesh_hash)},
                    {"samples", shape1.samples.indices.size()},
                    {"fit_rms", shape1.spectral.fit_rms},
                    {"interp_mu", shape1.spectral.mu}};
  diag["shape2"] = {{"path", shape2.mesh_path},
                    {"n", shape2.mesh.n()},
                    {"mesh_hash", hash_hex(shape2.mesh_hash)},
                    {"samples", shape2.samples.indices.size()},
                    {"fit_rms", shape2.spectral.fit_rms},
                    {"interp_mu", shape2.spectral.mu}};
  diag["M"] = shape1.basis.M;
  diag["solver"] = {{"mu1", opts.solver.mu1},
                    {"mu2", opts.solver.mu2},
                    {"penalty_start", opts.solver.penalty_start},
                    {"penalty_growth", opts.solver.penalty_growth},
                    {"outer_iters", opts.solver.outer_iters},
                    {"inner_iters", opts.solver.inner_iters},
                    {"inner_tol", opts.solver.inner_tol}};
  diag["result"] = {{"converged", match.coeffs.converged},
                    {"objective_history", match.coeffs.objective_history},
                    {"constraint_residual", match.coeffs.constraint_residual},
                    {"mass_residual_1", match.coeffs.mass_residual_1},
                    {"mass_residual_2", match.coeffs.mass_residual_2},
                    {"unitarity_residual", match.coeffs.unitarity_residual},
                    {"conformality_residual",
                     match.coeffs.conformality_residual},
                    {"outer_iterations", match.coeffs.outer_iterations},
                    {"inner_iterations", match.coeffs.inner_iterations}};
  std::ofstream f(fs::path(out_dir) / "diagnostics.json", std::ios::trunc);
  if (!f) throw IoError("cannot write diagnostics.json in " + out_dir);
  f << diag.dump(2) << "\n";
}

std::string format_timing_table(const ShapeArtifacts& s1,
                                const ShapeArtifacts& s2,
                                const MatchOutput& match) {
  const double lb = s1.seconds.lb_eigs + s2.seconds.lb_eigs;
  const double sg = s1.seconds.geodesics + s2.seconds.geodesics +
                    s1.seconds.interp + s2.seconds.interp +
                    match.solve_seconds + match.extract_seconds;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "# Vertices      %8d %8d\n"
                "# Sampled       %8zu %8zu\n"
                "LB + eigs       %8.2f s\n"
                "Spectral GMDS   %8.2f s\n"
                "Total           %8.2f s\n",
                s1.mesh.n(), s2.mesh.n(), s1.samples.indices.size(),
                s2.samples.indices.size(), lb, sg, lb + sg);
  return buf;
}

}  // namespace sgmds
