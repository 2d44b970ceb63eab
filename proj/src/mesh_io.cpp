// OFF and OBJ readers plus an OFF writer. Numbers go through
// std::from_chars / std::to_chars, which are locale-independent.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "sgmds/errors.hpp"
#include "sgmds/mesh.hpp"

namespace sgmds {

namespace {

bool is_blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

struct FieldScanner {
  const char* p;
  const char* last;
  explicit FieldScanner(const std::string& s)
      : p(s.c_str()), last(s.c_str() + s.size()) {}

  void skip_space() {
    while (p < last && std::isspace(static_cast<unsigned char>(*p))) ++p;
  }
  bool next_double(double* out) {
    skip_space();
    auto [end, ec] = std::from_chars(p, last, *out);
    if (ec != std::errc{}) return false;
    p = end;
    return true;
  }
  bool next_long(long* out) {
    skip_space();
    auto [end, ec] = std::from_chars(p, last, *out);
    if (ec != std::errc{}) return false;
    p = end;
    return true;
  }
};

TriMesh parse_off(std::istream& in, const std::string& path) {
  std::string line;
  long lineno = 0;
  auto next_content_line = [&]() -> std::string {
    while (std::getline(in, line)) {
      ++lineno;
      if (!is_blank_or_comment(line)) return line;
    }
    throw ParseError(path + ": unexpected end of file in OFF header/body");
  };

  std::string header = next_content_line();
  // Trim trailing whitespace/CR.
  while (!header.empty() &&
         std::isspace(static_cast<unsigned char>(header.back())))
    header.pop_back();
  if (header != "OFF")
    throw ParseError(path + ":" + std::to_string(lineno) +
                     ": expected 'OFF' header, got '" + header + "'");

  long nv = 0, nf = 0, ne = 0;
  {
    const std::string counts = next_content_line();
    FieldScanner sc(counts);
    if (!sc.next_long(&nv) || !sc.next_long(&nf) || !sc.next_long(&ne))
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": malformed OFF count line");
  }
  if (nv < 0 || nf < 0)
    throw ParseError(path + ": negative counts in OFF header");

  TriMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    const std::string vline = next_content_line();
    FieldScanner sc(vline);
    double x, y, z;
    if (!sc.next_double(&x) || !sc.next_double(&y) || !sc.next_double(&z))
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": malformed vertex line");
    mesh.vertices.emplace_back(x, y, z);
  }
  mesh.triangles.reserve(static_cast<std::size_t>(nf));
  for (long i = 0; i < nf; ++i) {
    const std::string fline = next_content_line();
    FieldScanner sc(fline);
    long cnt, a, b, c;
    if (!sc.next_long(&cnt))
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": malformed face line");
    if (cnt != 3)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": only triangular faces are supported (got " +
                       std::to_string(cnt) + "-gon)");
    if (!sc.next_long(&a) || !sc.next_long(&b) || !sc.next_long(&c))
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": malformed face line");
    mesh.triangles.push_back({static_cast<int>(a), static_cast<int>(b),
                              static_cast<int>(c)});
  }
  return mesh;
}

TriMesh parse_obj(std::istream& in, const std::string& path,
                  std::vector<std::string>* warnings) {
  TriMesh mesh;
  std::set<std::string> skipped;
  std::string line;
  long lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank_or_comment(line)) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      std::string rest;
      std::getline(ls, rest);
      FieldScanner sc(rest);
      double x, y, z;
      if (!sc.next_double(&x) || !sc.next_double(&y) || !sc.next_double(&z))
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": malformed vertex line");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<long> corners;
      std::string field;
      while (ls >> field) {
        // "v", "v/vt", "v//vn", "v/vt/vn": the vertex index leads.
        FieldScanner sc(field);
        long idx;
        if (!sc.next_long(&idx))
          throw ParseError(path + ":" + std::to_string(lineno) +
                           ": malformed face field '" + field + "'");
        if (idx == 0)
          throw ParseError(path + ":" + std::to_string(lineno) +
                           ": OBJ face index 0 is invalid");
        if (idx < 0)  // relative index, counted from the current vertex list
          idx = static_cast<long>(mesh.vertices.size()) + idx + 1;
        corners.push_back(idx - 1);  // to 0-based
      }
      if (corners.size() != 3)
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": only triangular faces are supported (got " +
                         std::to_string(corners.size()) + " corners)");
      mesh.triangles.push_back({static_cast<int>(corners[0]),
                                static_cast<int>(corners[1]),
                                static_cast<int>(corners[2])});
    } else {
      skipped.insert(tag);
    }
  }
  if (warnings) {
    for (const auto& tag : skipped)
      warnings->push_back("ignored OBJ record type '" + tag + "'");
  }
  return mesh;
}

std::string lower_extension(const std::string& path) {
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace

TriMesh load_mesh(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file: " + path);

  const std::string ext = lower_extension(path);
  TriMesh mesh;
  if (ext == "off")
    mesh = parse_off(in, path);
  else if (ext == "obj")
    mesh = parse_obj(in, path, warnings);
  else
    throw ParseError(path + ": unsupported mesh format '." + ext +
                     "' (supported: .off, .obj)");

  validate_mesh(mesh);
  return mesh;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;  // shortest round-trip form always fits
  out.append(buf, end);
}

}  // namespace

void save_mesh_off(const TriMesh& mesh, const std::string& path) {
  std::string out;
  out.reserve(static_cast<std::size_t>(mesh.n()) * 48 +
              static_cast<std::size_t>(mesh.m()) * 24 + 64);
  out += "OFF\n";
  out += std::to_string(mesh.n()) + " " + std::to_string(mesh.m()) + " 0\n";
  for (const auto& v : mesh.vertices) {
    append_double(out, v.x());
    out += ' ';
    append_double(out, v.y());
    out += ' ';
    append_double(out, v.z());
    out += '\n';
  }
  for (const auto& t : mesh.triangles) {
    out += "3 ";
    out += std::to_string(t[0]);
    out += ' ';
    out += std::to_string(t[1]);
    out += ' ';
    out += std::to_string(t[2]);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace sgmds
