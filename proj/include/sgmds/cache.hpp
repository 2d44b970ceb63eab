#pragma once

#include <cstdint>
#include <string>

#include "sgmds/geodesics.hpp"
#include "sgmds/laplacian.hpp"

namespace sgmds {

// Versioned binary cache containers. Each file carries a magic, a format
// version, a payload kind, and the content hash of its upstream artifact;
// loaders reject anything that does not match. Files are written in host
// byte order (caches are per-machine artifacts, not interchange files).

std::uint64_t fnv1a(const void* data, std::size_t len,
                    std::uint64_t seed = 1469598103934665603ull);
std::uint64_t hash_doubles(const double* data, std::size_t count,
                           std::uint64_t seed = 1469598103934665603ull);

/// Content hash of a basis (lambda, phi, mass); identifies the basis a
/// downstream artifact was computed from.
std::uint64_t eigenbasis_content_hash(const EigenBasis& basis);

/// Hash of a whole file's bytes; 0 if the file cannot be read.
std::uint64_t file_content_hash(const std::string& path);

void save_eigenbasis_cache(const EigenBasis& basis, std::uint64_t mesh_hash,
                           const std::string& path);
/// Throws CacheError if the file is malformed or expected_mesh_hash differs.
EigenBasis load_eigenbasis_cache(const std::string& path,
                                 std::uint64_t expected_mesh_hash);

void save_distances_cache(const SampledDistances& sd, const std::string& path);
SampledDistances load_distances_cache(const std::string& path,
                                      std::uint64_t expected_mesh_hash);

struct SpectralDistance;  // spectral_interp.hpp
void save_spectral_cache(const SpectralDistance& sd, const std::string& path);
SpectralDistance load_spectral_cache(const std::string& path,
                                     std::uint64_t expected_basis_hash);

/// Dense matrix container used for solved functional-map coefficients.
void save_matrix_binary(const Eigen::MatrixXd& m, const std::string& path);
Eigen::MatrixXd load_matrix_binary(const std::string& path);
/// Text form: one row per line, full double precision.
void save_matrix_text(const Eigen::MatrixXd& m, const std::string& path);

}  // namespace sgmds
