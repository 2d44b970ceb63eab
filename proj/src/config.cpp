#include "sgmds/config.hpp"

#include <charconv>
#include <fstream>

#include "sgmds/errors.hpp"

namespace sgmds {

namespace {

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

double parse_number(const std::string& path, const std::string& value) {
  double v = 0.0;
  auto r = std::from_chars(value.c_str(), value.c_str() + value.size(), v);
  if (r.ec != std::errc{} || r.ptr != value.c_str() + value.size())
    throw ParseError(path + ": not a number: '" + value + "'");
  return v;
}

}  // namespace

void apply_config_file(const std::string& path, SolverConfig* cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string content = trimmed(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected key = value");
    const std::string key = trimmed(content.substr(0, eq));
    const std::string value = trimmed(content.substr(eq + 1));
    if (key == "mu1")
      cfg->mu1 = parse_number(path, value);
    else if (key == "mu2")
      cfg->mu2 = parse_number(path, value);
    else if (key == "penalty_start")
      cfg->penalty_start = parse_number(path, value);
    else if (key == "penalty_growth")
      cfg->penalty_growth = parse_number(path, value);
    else if (key == "outer_iters")
      cfg->outer_iters = static_cast<int>(parse_number(path, value));
    else if (key == "inner_iters")
      cfg->inner_iters = static_cast<int>(parse_number(path, value));
    else if (key == "inner_tol")
      cfg->inner_tol = parse_number(path, value);
    else
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": unknown key '" + key + "'");
  }
}

}  // namespace sgmds
