#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "mrpred/bias_profile.hpp"
#include "mrpred/mc_harness.hpp"
#include "mrpred/resolution_select.hpp"

namespace mrpred {

using Json = nlohmann::json;

// Reads and parses a JSON file. Missing files and syntax errors are
// ConfigErrors.
Json load_config(const std::string& path);

// Applies "a.b.c=value": the value is parsed as JSON when it parses, and
// taken as a string otherwise. Intermediate objects are created as needed.
void apply_override(Json& config, const std::string& assignment);

// {"kind": "exponential", "params": {"xi": 1}, "scale": 1}
BiasProfile profile_from_json(const Json& j);
Json profile_to_json(const BiasProfile& profile);

// {"kind": "poly", "alpha": 1} / {"kind": "linear-exact", "tau2": 0.5} /
// {"kind": "tree-exact", "M": 2, "tau2": 0}
ErrorModel error_model_from_json(const Json& j);

// {"kind": "constant_delay", "param": 2}
PermutationSpec permutation_from_json(const Json& j);

// Either an explicit increasing array of n, or
// {"log10_lo": 3, "log10_hi": 7, "count": 17}.
std::vector<int> grid_from_json(const Json& j);

// Linear experiment: profile, tau2, beta0, n, reps, search_range [lo, hi],
// methods, seed, r_max_generation, workers. Missing search_range means
// [0, n-3].
ExperimentConfig experiment_from_json(const Json& j);

// Typed field access; errors name the field.
double number_field(const Json& j, const std::string& key);
double number_field(const Json& j, const std::string& key, double fallback);
int int_field(const Json& j, const std::string& key);
int int_field(const Json& j, const std::string& key, int fallback);
std::string string_field(const Json& j, const std::string& key, const std::string& fallback);

}  // namespace mrpred
