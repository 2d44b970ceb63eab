#pragma once

#include <string>

#include "sgmds/sgmds.hpp"

namespace sgmds {

/// Applies `key = value` lines from a plain-text file onto a SolverConfig.
/// Recognized keys: mu1, mu2, penalty_start, penalty_growth, outer_iters,
/// inner_iters, inner_tol. '#' starts a comment; unknown keys are an error.
void apply_config_file(const std::string& path, SolverConfig* cfg);

}  // namespace sgmds
