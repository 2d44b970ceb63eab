#include "sgmds/cache.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <vector>

#include "sgmds/errors.hpp"
#include "sgmds/spectral_interp.hpp"

namespace sgmds {

namespace {

constexpr std::uint32_t kMagic = 0x534d4753u;  // "SGMS"
constexpr std::uint16_t kVersion = 1;

enum class PayloadKind : std::uint16_t {
  kEigenBasis = 1,
  kDistances = 2,
  kSpectral = 3,
  kMatrix = 4,
};

class Writer {
 public:
  Writer(const std::string& path, PayloadKind kind) : path_(path) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot open cache for writing: " + path);
    u32(kMagic);
    u16(kVersion);
    u16(static_cast<std::uint16_t>(kind));
  }
  void u16(std::uint16_t v) { raw(&v, sizeof v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void doubles(const double* p, std::size_t n) { raw(p, n * sizeof(double)); }
  void ints(const int* p, std::size_t n) { raw(p, n * sizeof(int)); }
  void close() {
    out_.close();
    if (!out_) throw IoError("write failed: " + path_);
  }

 private:
  void raw(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  Reader(const std::string& path, PayloadKind kind) : path_(path) {
    in_.open(path, std::ios::binary);
    if (!in_) throw CacheError("cannot open cache: " + path);
    if (u32() != kMagic) throw CacheError("bad magic in cache: " + path);
    if (u16() != kVersion) throw CacheError("unsupported cache version: " + path);
    if (u16() != static_cast<std::uint16_t>(kind))
      throw CacheError("cache holds a different payload kind: " + path);
  }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return get<double>(); }
  void doubles(double* p, std::size_t n) { raw(p, n * sizeof(double)); }
  void ints(int* p, std::size_t n) { raw(p, n * sizeof(int)); }

 private:
  template <typename T>
  T get() {
    T v;
    raw(&v, sizeof v);
    return v;
  }
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
      throw CacheError("truncated cache: " + path_);
  }
  std::string path_;
  std::ifstream in_;
};

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t hash_doubles(const double* data, std::size_t count,
                           std::uint64_t seed) {
  return fnv1a(data, count * sizeof(double), seed);
}

std::uint64_t eigenbasis_content_hash(const EigenBasis& basis) {
  std::uint64_t h = hash_doubles(basis.lambda.data(),
                                 static_cast<std::size_t>(basis.lambda.size()));
  h = hash_doubles(basis.phi.data(), static_cast<std::size_t>(basis.phi.size()),
                   h);
  h = hash_doubles(basis.mass.a.data(),
                   static_cast<std::size_t>(basis.mass.a.size()), h);
  return h;
}

std::uint64_t file_content_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return 0;
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

void save_eigenbasis_cache(const EigenBasis& basis, std::uint64_t mesh_hash,
                           const std::string& path) {
  Writer w(path, PayloadKind::kEigenBasis);
  const std::uint32_t n = static_cast<std::uint32_t>(basis.phi.rows());
  w.u64(mesh_hash);
  w.u32(n);
  w.u32(static_cast<std::uint32_t>(basis.M));
  w.doubles(basis.lambda.data(), static_cast<std::size_t>(basis.M));
  w.doubles(basis.phi.data(), static_cast<std::size_t>(basis.phi.size()));
  w.doubles(basis.mass.a.data(), n);
  w.f64(basis.mass.total_area);
  w.close();
}

EigenBasis load_eigenbasis_cache(const std::string& path,
                                 std::uint64_t expected_mesh_hash) {
  Reader r(path, PayloadKind::kEigenBasis);
  const std::uint64_t mesh_hash = r.u64();
  if (mesh_hash != expected_mesh_hash)
    throw CacheError("eigenbasis cache was built from a different mesh: " +
                     path);
  const std::uint32_t n = r.u32();
  const std::uint32_t m = r.u32();
  if (n == 0 || m == 0 || m > n)
    throw CacheError("implausible dimensions in cache: " + path);
  EigenBasis basis;
  basis.M = static_cast<int>(m);
  basis.lambda.resize(m);
  r.doubles(basis.lambda.data(), m);
  basis.phi.resize(n, m);
  r.doubles(basis.phi.data(), static_cast<std::size_t>(n) * m);
  basis.mass.a.resize(n);
  r.doubles(basis.mass.a.data(), n);
  basis.mass.total_area = r.f64();
  return basis;
}

void save_distances_cache(const SampledDistances& sd, const std::string& path) {
  Writer w(path, PayloadKind::kDistances);
  const std::uint32_t m = static_cast<std::uint32_t>(sd.indices.size());
  w.u64(sd.mesh_hash);
  w.u32(m);
  w.ints(sd.indices.data(), m);
  w.doubles(sd.d.data(), static_cast<std::size_t>(sd.d.size()));
  w.close();
}

SampledDistances load_distances_cache(const std::string& path,
                                      std::uint64_t expected_mesh_hash) {
  Reader r(path, PayloadKind::kDistances);
  SampledDistances sd;
  sd.mesh_hash = r.u64();
  if (sd.mesh_hash != expected_mesh_hash)
    throw CacheError("distance cache was built from a different mesh: " + path);
  const std::uint32_t m = r.u32();
  if (m == 0 || m > (1u << 24))
    throw CacheError("implausible sample count in cache: " + path);
  sd.indices.resize(m);
  r.ints(sd.indices.data(), m);
  sd.d.resize(m, m);
  r.doubles(sd.d.data(), static_cast<std::size_t>(m) * m);
  return sd;
}

void save_spectral_cache(const SpectralDistance& sd, const std::string& path) {
  Writer w(path, PayloadKind::kSpectral);
  const std::uint32_t m = static_cast<std::uint32_t>(sd.alpha.rows());
  w.u64(sd.basis_hash);
  w.u32(m);
  w.f64(sd.mu);
  w.f64(sd.fit_rms);
  w.doubles(sd.alpha.data(), static_cast<std::size_t>(sd.alpha.size()));
  w.close();
}

SpectralDistance load_spectral_cache(const std::string& path,
                                     std::uint64_t expected_basis_hash) {
  Reader r(path, PayloadKind::kSpectral);
  SpectralDistance sd;
  sd.basis_hash = r.u64();
  if (sd.basis_hash != expected_basis_hash)
    throw CacheError("spectral cache was built from a different basis: " + path);
  const std::uint32_t m = r.u32();
  if (m == 0 || m > (1u << 20))
    throw CacheError("implausible dimension in cache: " + path);
  sd.mu = r.f64();
  sd.fit_rms = r.f64();
  sd.alpha.resize(m, m);
  r.doubles(sd.alpha.data(), static_cast<std::size_t>(m) * m);
  return sd;
}

void save_matrix_binary(const Eigen::MatrixXd& m, const std::string& path) {
  Writer w(path, PayloadKind::kMatrix);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  w.doubles(m.data(), static_cast<std::size_t>(m.size()));
  w.close();
}

Eigen::MatrixXd load_matrix_binary(const std::string& path) {
  Reader r(path, PayloadKind::kMatrix);
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20))
    throw CacheError("implausible dimensions in matrix file: " + path);
  Eigen::MatrixXd m(rows, cols);
  r.doubles(m.data(), static_cast<std::size_t>(rows) * cols);
  return m;
}

void save_matrix_text(const Eigen::MatrixXd& m, const std::string& path) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 24);
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, m(i, j));
      (void)ec;
      if (j) out += ' ';
      out.append(buf, end);
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace sgmds
