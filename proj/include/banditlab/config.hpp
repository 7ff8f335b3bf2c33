#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "banditlab/harness.hpp"

namespace bandit {

// Experiment files are flat `key = value` lines. `#` starts a comment. Each
// `[policy]` header opens a policy block; `[experiment]` returns to the top
// level. Unknown keys, unknown sections and repeated keys are errors. The
// schema is documented in README.md.

/// beta(a,b), gaussian(m,v), gaussian(flat), gamma(k,r), invgamma(a,b),
/// grid(lo,hi) or grid(lo,hi,points) for a uniform grid prior.
Prior parse_prior(std::string_view text);

/// A prior as above, or point(x).
MeanPrior parse_mean_prior(std::string_view text);

/// Comma-separated reals.
std::vector<double> parse_number_list(std::string_view text);

ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

OutputFormat parse_format(std::string_view name);

}  // namespace bandit
