#include "sgmds/correspondence.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "sgmds/errors.hpp"
#include "sgmds/threads.hpp"

namespace sgmds {

Eigen::VectorXd transfer_function(const Eigen::MatrixXd& alpha,
                                  const EigenBasis& basis1,
                                  const EigenBasis& basis2,
                                  const Eigen::VectorXd& f1) {
  if (f1.size() != basis1.phi.rows())
    throw ValidationError("transfer_function: f1 length mismatch", {});
  if (alpha.cols() != basis1.M || alpha.rows() != basis2.M)
    throw ValidationError("transfer_function: alpha dimensions mismatch", {});
  const Eigen::VectorXd coeffs1 =
      basis1.phi.transpose() * basis1.mass.a.cwiseProduct(f1);
  return basis2.phi * (alpha * coeffs1);
}

PointMap extract_point_map(const Eigen::MatrixXd& alpha,
                           const EigenBasis& basis1, const EigenBasis& basis2,
                           int threads, bool area_weighted) {
  if (alpha.cols() != basis1.M || alpha.rows() != basis2.M)
    throw ValidationError("extract_point_map: alpha dimensions mismatch", {});
  const int n1 = static_cast<int>(basis1.phi.rows());
  const int n2 = static_cast<int>(basis2.phi.rows());

  // Embedded shape-1 rows: row_i(Phi1) * alpha'.
  Eigen::MatrixXd embedded = basis1.phi * alpha.transpose();  // n1 x M2
  Eigen::MatrixXd targets = basis2.phi;
  if (area_weighted) {
    embedded = basis1.mass.a.asDiagonal() * embedded;
    targets = basis2.mass.a.asDiagonal() * targets;
  }
  const Eigen::VectorXd target_sq = targets.rowwise().squaredNorm();

  PointMap map;
  map.target_index.resize(static_cast<std::size_t>(n1));
  map.match_distance.resize(static_cast<std::size_t>(n1));

  // Blocked exhaustive search: distances via the inner-product expansion,
  // fixed block size so the arithmetic is independent of the thread count.
  constexpr int kBlock = 128;
  const std::size_t nblocks =
      static_cast<std::size_t>((n1 + kBlock - 1) / kBlock);
  parallel_for(nblocks, threads, [&](std::size_t blk) {
    const int begin = static_cast<int>(blk) * kBlock;
    const int end = std::min(begin + kBlock, n1);
    const Eigen::MatrixXd cross =
        targets * embedded.middleRows(begin, end - begin).transpose();
    for (int i = begin; i < end; ++i) {
      const double self_sq = embedded.row(i).squaredNorm();
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n2; ++j) {
        const double d = self_sq + target_sq[j] - 2.0 * cross(j, i - begin);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      map.target_index[static_cast<std::size_t>(i)] = best;
      // The expansion above can cancel; the winner's distance is recomputed
      // directly.
      map.match_distance[static_cast<std::size_t>(i)] =
          (embedded.row(i) - targets.row(best)).norm();
    }
  });
  return map;
}

Eigen::MatrixXd materialize_dense_map(const Eigen::MatrixXd& alpha,
                                      const EigenBasis& basis1,
                                      const EigenBasis& basis2) {
  const double entries = static_cast<double>(basis1.phi.rows()) *
                         static_cast<double>(basis2.phi.rows());
  if (entries > 4e6)
    throw ValidationError(
        "materialize_dense_map: refusing to build a dense operator above "
        "4e6 entries",
        {});
  return basis2.phi * alpha *
         (basis1.mass.a.asDiagonal() * basis1.phi).transpose();
}

void save_point_map(const PointMap& map, const std::string& path) {
  std::string out;
  out.reserve(map.target_index.size() * 32);
  char buf[40];
  for (std::size_t i = 0; i < map.target_index.size(); ++i) {
    out += std::to_string(i);
    out += ' ';
    out += std::to_string(map.target_index[i]);
    out += ' ';
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, map.match_distance[i]);
    (void)ec;
    out.append(buf, end);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path);
}

PointMap load_point_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open point map: " + path);
  PointMap map;
  std::string line;
  long expect = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const char* p = line.c_str();
    const char* last = p + line.size();
    long i = 0, j = 0;
    double d = 0.0;
    auto r1 = std::from_chars(p, last, i);
    if (r1.ec != std::errc{}) throw ParseError(path + ": malformed line");
    p = r1.ptr;
    while (p < last && *p == ' ') ++p;
    auto r2 = std::from_chars(p, last, j);
    if (r2.ec != std::errc{}) throw ParseError(path + ": malformed line");
    p = r2.ptr;
    while (p < last && *p == ' ') ++p;
    auto r3 = std::from_chars(p, last, d);
    if (r3.ec != std::errc{}) throw ParseError(path + ": malformed line");
    if (i != expect)
      throw ParseError(path + ": unexpected vertex order at line " +
                       std::to_string(expect));
    map.target_index.push_back(static_cast<int>(j));
    map.match_distance.push_back(d);
    ++expect;
  }
  return map;
}

}  // namespace sgmds
