#include "mrpred/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mrpred/errors.hpp"

namespace mrpred {

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set: expected key=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  Json* node = &config;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("--set: empty path component in '" + path + "'");
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError("--set: '" + path + "' descends into a non-object");
      *node = Json::object();
    }
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

namespace {

const Json& require(const Json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(key + ": required field is missing");
  return j.at(key);
}

}  // namespace

double number_field(const Json& j, const std::string& key) {
  const Json& v = require(j, key);
  if (!v.is_number()) throw ConfigError(key + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(key + ": must be finite");
  return d;
}

double number_field(const Json& j, const std::string& key, double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return number_field(j, key);
}

int int_field(const Json& j, const std::string& key) {
  const Json& v = require(j, key);
  if (!v.is_number_integer()) {
    if (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()) && std::abs(v.get<double>()) < 2e9)
      return static_cast<int>(v.get<double>());
    throw ConfigError(key + ": expected an integer");
  }
  const auto i = v.get<long long>();
  if (i < -2000000000LL || i > 2000000000LL) throw ConfigError(key + ": integer out of range");
  return static_cast<int>(i);
}

int int_field(const Json& j, const std::string& key, int fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return int_field(j, key);
}

std::string string_field(const Json& j, const std::string& key, const std::string& fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(key + ": expected a string");
  return v.get<std::string>();
}

BiasProfile profile_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("profile: expected an object");
  const std::string kind = string_field(j, "kind", "");
  if (kind.empty()) throw ConfigError("profile.kind: required field is missing");
  const Json params = j.contains("params") ? j.at("params") : Json::object();
  if (!params.is_object()) throw ConfigError("profile.params: expected an object");
  const double scale = number_field(j, "scale", 1.0);

  try {
    if (kind == "hard_threshold") return BiasProfile::hard_threshold(int_field(params, "r0"), scale);
    if (kind == "exponential") return BiasProfile::exponential(number_field(params, "xi"), scale);
    if (kind == "polynomial") return BiasProfile::polynomial(number_field(params, "xi"), scale);
    if (kind == "logarithmic") return BiasProfile::logarithmic(number_field(params, "xi"), scale);
    if (kind == "double_descent")
      return BiasProfile::double_descent(int_field(params, "r_low"), int_field(params, "r_high"), scale);
    if (kind == "multi_descent") {
      const Json& segs = require(params, "segments");
      if (!segs.is_array()) throw ConfigError("segments: expected an array of [r_low, r_high] pairs");
      std::vector<DescentSegment> out;
      for (const auto& s : segs) {
        if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number_integer())
          throw ConfigError("segments: each entry must be an integer pair [r_low, r_high]");
        out.push_back({s[0].get<int>(), s[1].get<int>()});
      }
      return BiasProfile::multi_descent(std::move(out), scale);
    }
    if (kind == "tabulated") {
      const Json& vals = require(params, "values");
      if (!vals.is_array()) throw ConfigError("values: expected an array of numbers");
      std::vector<double> out;
      for (const auto& v : vals) {
        if (!v.is_number()) throw ConfigError("values: expected numbers");
        out.push_back(v.get<double>());
      }
      return BiasProfile::tabulated(std::move(out), scale);
    }
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("profile.") + e.what());
  }
  throw ConfigError("profile.kind: unknown kind '" + kind + "'");
}

Json profile_to_json(const BiasProfile& profile) {
  Json params = Json::object();
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, HardThreshold>) {
          params["r0"] = k.r0;
        } else if constexpr (std::is_same_v<K, Exponential> || std::is_same_v<K, Polynomial> ||
                             std::is_same_v<K, Logarithmic>) {
          params["xi"] = k.xi;
        } else if constexpr (std::is_same_v<K, DoubleDescent>) {
          params["r_low"] = k.r_low;
          params["r_high"] = k.r_high;
        } else if constexpr (std::is_same_v<K, MultiDescent>) {
          Json segs = Json::array();
          for (const auto& s : k.segments) segs.push_back({s.r_low, s.r_high});
          params["segments"] = segs;
        } else {
          params["values"] = k.values;
        }
      },
      profile.kind());
  return Json{{"kind", profile.family()}, {"params", params}, {"scale", profile.scale()}};
}

ErrorModel error_model_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("error_model: expected an object");
  ErrorModel m;
  m.kind = parse_error_model(string_field(j, "kind", "poly"));
  m.alpha = number_field(j, "alpha", m.kind == ErrorModel::Kind::Exponential ? 2.0 : 1.0);
  m.tau2 = number_field(j, "tau2", 0.0);
  m.M = int_field(j, "M", 2);
  try {
    m.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("error_model: ") + e.what());
  }
  return m;
}

PermutationSpec permutation_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("permutation: expected an object");
  PermutationSpec p;
  p.kind = parse_permutation(string_field(j, "kind", "identity"));
  p.param = number_field(j, "param", 0.0);
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("permutation: ") + e.what());
  }
  return p;
}

std::vector<int> grid_from_json(const Json& j) {
  if (j.is_array()) {
    std::vector<int> out;
    for (const auto& v : j) {
      if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 2000000000LL)
        throw ConfigError("n_grid: entries must be positive integers");
      out.push_back(v.get<int>());
    }
    for (std::size_t i = 1; i < out.size(); ++i)
      if (out[i] <= out[i - 1]) throw ConfigError("n_grid: must be strictly increasing");
    if (out.size() < 2) throw ConfigError("n_grid: need at least two points");
    return out;
  }
  if (j.is_object()) {
    try {
      return log10_grid(number_field(j, "log10_lo"), number_field(j, "log10_hi"), int_field(j, "count"));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("n_grid.") + e.what());
    }
  }
  throw ConfigError("n_grid: expected an array or {log10_lo, log10_hi, count}");
}

ExperimentConfig experiment_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig c;
  c.family = string_field(j, "family", "linear");
  c.profile = profile_from_json(require(j, "profile"));
  c.tau2 = number_field(j, "tau2", c.tau2);
  c.beta0 = number_field(j, "beta0", 0.0);
  c.n = int_field(j, "n");
  c.reps = int_field(j, "reps", c.reps);
  c.workers = int_field(j, "workers", 1);
  c.r_max_generation = int_field(j, "r_max_generation", -1);
  if (j.contains("search_range")) {
    const Json& sr = j.at("search_range");
    if (!sr.is_array() || sr.size() != 2 || !sr[0].is_number_integer() || !sr[1].is_number_integer())
      throw ConfigError("search_range: expected [lo, hi]");
    c.search_range = {sr[0].get<int>(), sr[1].get<int>()};
  } else {
    c.search_range = {0, c.n - 3};
  }
  if (j.contains("methods")) {
    const Json& ms = j.at("methods");
    if (!ms.is_array()) throw ConfigError("methods: expected an array of strings");
    c.methods.clear();
    for (const auto& m : ms) {
      if (!m.is_string()) throw ConfigError("methods: expected an array of strings");
      c.methods.push_back(parse_method(m.get<std::string>()));
    }
  }
  if (j.contains("seed")) {
    const Json& s = j.at("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<long long>() < 0))
      throw ConfigError("seed: expected a nonnegative integer");
    c.master_seed = s.get<std::uint64_t>();
  }
  c.validate();
  return c;
}

}  // namespace mrpred
