#include "sgmds/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "sgmds/errors.hpp"
#include "sgmds/geodesics.hpp"
#include "sgmds/threads.hpp"

namespace sgmds {

Eigen::VectorXd geodesic_errors(const PointMap& map,
                                const std::vector<int>& truth,
                                const TriMesh& mesh2, int threads) {
  const std::size_t n1 = map.target_index.size();
  if (truth.size() != n1)
    throw ValidationError("geodesic_errors: truth length differs from map", {});
  for (int t : truth)
    if (t < 0 || t >= mesh2.n())
      throw ValidationError("geodesic_errors: truth index out of range", {});

  // One fast-marching field per distinct ground-truth vertex.
  std::vector<int> distinct = truth;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::map<int, int> slot;
  for (std::size_t i = 0; i < distinct.size(); ++i)
    slot[distinct[i]] = static_cast<int>(i);

  const FastMarcher marcher(mesh2);
  std::vector<Eigen::VectorXd> fields(distinct.size());
  parallel_for(distinct.size(), threads, [&](std::size_t i) {
    fields[i] = marcher.run(distinct[i]).dist;
  });

  const double norm = std::sqrt(mesh2.surface_area());
  Eigen::VectorXd errors(static_cast<Eigen::Index>(n1));
  for (std::size_t i = 0; i < n1; ++i) {
    const auto& field = fields[static_cast<std::size_t>(slot[truth[i]])];
    errors[static_cast<Eigen::Index>(i)] =
        field[map.target_index[i]] / norm;
  }
  return errors;
}

DistortionCurve distortion_curve(const Eigen::VectorXd& errors,
                                 const std::vector<double>& thresholds) {
  if (thresholds.empty() || thresholds.front() != 0.0)
    throw ValidationError("distortion_curve: thresholds must start at 0", {});
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (thresholds[i] <= thresholds[i - 1])
      throw ValidationError("distortion_curve: thresholds must increase", {});

  std::vector<double> sorted(errors.data(), errors.data() + errors.size());
  std::sort(sorted.begin(), sorted.end());

  DistortionCurve curve;
  curve.thresholds = thresholds;
  curve.fraction.resize(thresholds.size());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const auto it =
        std::upper_bound(sorted.begin(), sorted.end(), thresholds[i]);
    curve.fraction[i] = n > 0 ? static_cast<double>(it - sorted.begin()) / n : 0.0;
  }
  return curve;
}

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 100; ++i) t.push_back(0.0025 * i);
  return t;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  out.append(buf, end);
}

}  // namespace

void save_curve_csv(const DistortionCurve& curve, const std::string& path) {
  std::string out = "threshold,fraction\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    append_double(out, curve.thresholds[i]);
    out += ',';
    append_double(out, curve.fraction[i]);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path);
}

void save_curve_svg(const DistortionCurve& curve, const std::string& path) {
  const double w = 640, h = 480, ml = 60, mr = 20, mt = 20, mb = 50;
  const double x0 = curve.thresholds.front();
  const double x1 = std::max(curve.thresholds.back(), x0 + 1e-12);
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - y * (h - mt - mb); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
       "viewBox=\"0 0 640 480\">\n";
  s += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  // Axes and gridlines at 0.25 steps of fraction.
  for (int g = 0; g <= 4; ++g) {
    const double y = py(g * 0.25);
    s += "<line x1=\"" + std::to_string(px(x0)) + "\" y1=\"" +
         std::to_string(y) + "\" x2=\"" + std::to_string(px(x1)) + "\" y2=\"" +
         std::to_string(y) + "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"8\" y=\"" + std::to_string(y + 4) +
         "\" font-size=\"12\">" + std::to_string(g * 25) + "%</text>\n";
  }
  s += "<line x1=\"" + std::to_string(px(x0)) + "\" y1=\"" +
       std::to_string(py(0)) + "\" x2=\"" + std::to_string(px(x1)) +
       "\" y2=\"" + std::to_string(py(0)) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + std::to_string(px(x0)) + "\" y1=\"" +
       std::to_string(py(0)) + "\" x2=\"" + std::to_string(px(x0)) +
       "\" y2=\"" + std::to_string(py(1)) + "\" stroke=\"black\"/>\n";
  s += "<text x=\"" + std::to_string(w / 2 - 80) + "\" y=\"" +
       std::to_string(h - 12) +
       "\" font-size=\"13\">relative geodesic error</text>\n";
  s += "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    s += std::to_string(px(curve.thresholds[i])) + "," +
         std::to_string(py(curve.fraction[i])) + " ";
  }
  s += "\"/>\n</svg>\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!f) throw IoError("write failed: " + path);
}

std::vector<int> load_truth_indices(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ground-truth file: " + path);
  std::vector<int> truth;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    long v = 0;
    auto r = std::from_chars(line.c_str(), line.c_str() + line.size(), v);
    if (r.ec != std::errc{})
      throw ParseError(path + ": malformed index line '" + line + "'");
    truth.push_back(static_cast<int>(v));
  }
  return truth;
}

}  // namespace sgmds
