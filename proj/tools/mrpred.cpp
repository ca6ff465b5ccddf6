// mrpred: exact and simulated prediction-error curves for multi-resolution
// linear and tree models.
//
// Exit codes: 0 ok, 2 configuration error, 3 domain or fit error, 4 other.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mrpred/config.hpp"
#include "mrpred/errors.hpp"
#include "mrpred/linear_model.hpp"
#include "mrpred/mc_harness.hpp"
#include "mrpred/report_io.hpp"
#include "mrpred/resolution_select.hpp"
#include "mrpred/svg.hpp"
#include "mrpred/tree_model.hpp"

namespace fs = std::filesystem;
using namespace mrpred;

namespace {

struct Common {
  std::string config_path;
  std::string out_dir;
  bool svg = false;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

Json resolve_config(const Common& c) {
  Json j = c.config_path.empty() ? Json::object() : load_config(c.config_path);
  for (const auto& s : c.sets) apply_override(j, s);
  if (c.seed) j["seed"] = *c.seed;
  if (c.workers) j["workers"] = *c.workers;
  return j;
}

const Json& field(const Json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(key + ": required field is missing");
  return j.at(key);
}

linear::LinearModelSpec linear_spec_from(const Json& j) {
  linear::LinearModelSpec spec{profile_from_json(field(j, "profile")), number_field(j, "tau2", 0.0),
                               number_field(j, "beta0", 0.0)};
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return spec;
}

SearchRange range_from(const Json& j, SearchRange fallback) {
  if (!j.contains("search_range")) return fallback;
  const Json& sr = j.at("search_range");
  if (!sr.is_array() || sr.size() != 2 || !sr[0].is_number_integer() || !sr[1].is_number_integer())
    throw ConfigError("search_range: expected [lo, hi]");
  return {sr[0].get<int>(), sr[1].get<int>()};
}

void write_table(const fs::path& dir, const std::string& name, const CsvTable& t) {
  write_file(dir / name, to_csv_string(t));
  std::cout << "wrote " << (dir / name).string() << '\n';
}

void write_json(const fs::path& dir, const std::string& name, const Json& j) {
  write_file(dir / name, j.dump(2) + "\n");
  std::cout << "wrote " << (dir / name).string() << '\n';
}

void write_svg(const fs::path& dir, const std::string& name, const std::vector<Series>& series,
               const SvgOptions& options) {
  emit_svg(series, dir / name, options);
  std::cout << "wrote " << (dir / name).string() << '\n';
}

Series curve_series(const std::string& name, const ErrorCurve& c) {
  Series s{name, {}, c.values};
  for (int r = c.first_r; r <= c.last_r(); ++r) s.x.push_back(r);
  return s;
}

// ---------------------------------------------------------------------------

int cmd_curve(const Common& c) {
  const Json j = resolve_config(c);
  const auto spec = linear_spec_from(j);
  const int n = int_field(j, "n");
  const auto range = range_from(j, {0, n - 3});
  const auto pe = exact_pe_curve(spec, n, range);

  ErrorCurve a = pe, eps = pe;
  a.kind = CurveKind::ExactPE;
  eps.kind = CurveKind::EstimationError;
  for (int r = range.lo; r <= range.hi; ++r) {
    a.values[r - range.lo] = spec.profile(r);
    eps.values[r - range.lo] = linear::exact_eps(spec, n, r);
  }
  const fs::path dir = c.out_dir;
  write_table(dir, "pe_exact.csv", curves_to_table({"A_r", "eps_exact", "pe_exact"}, {&a, &eps, &pe}));
  const int r_opt = argmin_resolution(pe, range);
  std::cout << "r_opt=" << r_opt << " pe_opt=" << format_number(pe.at(r_opt)) << '\n';
  if (c.svg)
    write_svg(dir, "pe_exact.svg", {curve_series("PE", pe), curve_series("A(r)", a), curve_series("eps", eps)},
              {spec.profile.describe() + ", n=" + std::to_string(n), "r", "error", true});
  return 0;
}

void simulate_one(const ExperimentConfig& config, const fs::path& dir, const std::string& tag, bool curves,
                  bool svg, Json& summary) {
  const auto report = run_table_experiment(config);
  write_table(dir, "table" + tag + ".csv", table_report_to_csv(report));
  summary.push_back(to_json(report));
  std::cout << report.profile << " tau2=" << format_number(report.tau2) << " n=" << report.n
            << " r_opt=" << report.r_opt << " pe_opt=" << format_number(report.pe_opt) << '\n';
  for (const auto& row : report.rows)
    std::cout << "  " << to_string(row.method) << " mean_R=" << format_number(row.mean_R) << " QR=["
              << format_number(row.qr_lo_R) << ", " << format_number(row.qr_hi_R)
              << "] mean_stdPE=" << format_number(row.mean_std_pe) << " QR=[" << format_number(row.qr_lo_std_pe)
              << ", " << format_number(row.qr_hi_std_pe) << "]\n";
  if (!curves) return;
  const auto bc = estimator_bias_curves(config);
  write_table(dir, "bias_curves" + tag + ".csv",
              curves_to_table({"exact_pe", "cv_mean", "cv_se", "ue_mean", "ue_se", "ic_mean", "ic_se",
                               "sigma_hat2_mean", "sigma_hat2_se"},
                              {&bc.exact_pe, &bc.cv_mean, &bc.cv_se, &bc.ue_mean, &bc.ue_se, &bc.ic_mean, &bc.ic_se,
                               &bc.sigma_hat2_mean, &bc.sigma_hat2_se}));
  if (svg)
    write_svg(dir, "bias_curves" + tag + ".svg",
              {curve_series("exact PE", bc.exact_pe), curve_series("CV", bc.cv_mean), curve_series("UE", bc.ue_mean),
               curve_series("IC", bc.ic_mean)},
              {report.profile + ", n=" + std::to_string(config.n), "r", "prediction error", true});
}

int cmd_simulate(const Common& c) {
  const Json j = resolve_config(c);
  const bool curves = j.value("bias_curves", false);
  const fs::path dir = c.out_dir;
  Json summary = Json::array();
  if (j.contains("profiles")) {
    const Json& list = j.at("profiles");
    if (!list.is_array() || list.empty()) throw ConfigError("profiles: expected a nonempty array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Json one = j;
      one.erase("profiles");
      one["profile"] = list[i];
      const auto config = experiment_from_json(one);
      simulate_one(config, dir, "_" + std::to_string(i) + "_" + config.profile.family(), curves, c.svg, summary);
    }
  } else {
    simulate_one(experiment_from_json(j), dir, "", curves, c.svg, summary);
  }
  write_json(dir, "tables.json", summary);
  return 0;
}

int run_descent(const Json& j, const fs::path& dir, bool svg, const std::string& stem) {
  const auto spec = linear_spec_from(j);
  const int n = int_field(j, "n");
  const auto range = range_from(j, {1, n - 3});
  const auto pe = exact_pe_curve(spec, n, range);
  const auto minima = local_minima(pe);

  CsvTable t;
  t.header = {"r", "A_r", "pe_exact", "local_min"};
  for (int r = range.lo; r <= range.hi; ++r) {
    const bool is_min = std::find(minima.begin(), minima.end(), r) != minima.end();
    t.add_row({static_cast<double>(r), spec.profile(r), pe.at(r), is_min ? 1.0 : 0.0});
  }
  write_table(dir, stem + ".csv", t);
  std::cout << "local minima:";
  for (int r : minima) std::cout << ' ' << r;
  std::cout << '\n';
  if (svg) {
    ErrorCurve a = pe;
    for (int r = range.lo; r <= range.hi; ++r) a.values[r - range.lo] = spec.profile(r);
    write_svg(dir, stem + ".svg", {curve_series("A(r)", a), curve_series("PE", pe)},
              {spec.profile.describe() + ", n=" + std::to_string(n), "r", "error", j.value("log_y", true)});
  }
  return 0;
}

int cmd_descent(const Common& c) {
  const Json j = resolve_config(c);
  const auto profile = profile_from_json(field(j, "profile"));
  if (profile.family() != "double_descent" && profile.family() != "multi_descent")
    throw ConfigError("profile.kind: descent needs double_descent or multi_descent");
  return run_descent(j, c.out_dir, c.svg, "descent");
}

int run_rates(const Json& j, const fs::path& dir, bool svg, const std::string& stem) {
  const auto profile = profile_from_json(field(j, "profile"));
  const auto model = error_model_from_json(field(j, "error_model"));
  const auto grid = grid_from_json(field(j, "n_grid"));
  const auto transform = parse_rate_transform(string_field(j, "transform", "loss"));
  const auto report = rate_probe(profile, model, grid, transform, int_field(j, "workers", 1));
  write_table(dir, stem + ".csv", rate_report_to_csv(report));
  write_json(dir, stem + ".json", to_json(report));
  std::cout << "transform=" << to_string(report.transform) << " slope=" << format_number(report.fit.slope)
            << " intercept=" << format_number(report.fit.intercept)
            << " r_squared=" << format_number(report.fit.r_squared)
            << " all_interior=" << (report.all_interior ? "true" : "false") << '\n';
  if (svg) {
    Series pts{"R_n", {}, {}};
    Series line{"fit", {}, {}};
    for (const auto& p : report.points) {
      const double x = std::log(static_cast<double>(p.n));
      pts.x.push_back(x);
      line.x.push_back(x);
      pts.y.push_back(transform == RateTransform::LogLossVsLogN   ? std::log(p.L)
                      : transform == RateTransform::RVsLogN       ? static_cast<double>(p.R)
                                                                  : static_cast<double>(p.R) / p.n);
      line.y.push_back(report.fit.slope * x + report.fit.intercept);
    }
    pts.name = to_string(transform);
    write_svg(dir, stem + ".svg", {pts, line}, {report.profile + ", " + report.error_model, "log n", "", false});
  }
  return 0;
}

int cmd_rates(const Common& c) { return run_rates(resolve_config(c), c.out_dir, c.svg, "rates"); }

int cmd_ordering(const Common& c) {
  const Json j = resolve_config(c);
  const auto profile = profile_from_json(field(j, "profile"));
  const auto perm = permutation_from_json(field(j, "permutation"));
  const auto model = error_model_from_json(field(j, "error_model"));
  const auto grid = grid_from_json(field(j, "n_grid"));
  const auto report = ordering_experiment(profile, perm, grid, model, int_field(j, "workers", 1));
  const fs::path dir = c.out_dir;
  write_table(dir, "ordering_rows.csv", ordering_rows_to_csv(report));
  write_table(dir, "ordering_rates.csv", ordering_points_to_csv(report));
  write_json(dir, "ordering.json", to_json(report));
  std::cout << report.permutation << " max_ratio=" << format_number(report.max_ratio)
            << " nested_inequality=" << (report.nested_inequality_holds ? "holds" : "violated") << '\n';
  if (c.svg) {
    Series a{"A(r)", {}, {}}, ap{"A'(r)", {}, {}};
    for (const auto& row : report.rows) {
      a.x.push_back(row.r);
      a.y.push_back(row.A);
      ap.x.push_back(row.r);
      ap.y.push_back(row.A_perm);
    }
    write_svg(dir, "ordering.svg", {a, ap}, {report.profile + ", " + report.permutation, "r", "bias", true});
  }
  return 0;
}

int cmd_tree_curve(const Common& c) {
  const Json j = resolve_config(c);
  tree::TreeModelSpec spec{int_field(j, "M", 2), profile_from_json(field(j, "profile")), number_field(j, "tau2", 0.0),
                           number_field(j, "beta0", 0.0)};
  spec.validate();
  const int n = int_field(j, "n");
  if (n < 1) throw ConfigError("n: must be >= 1");
  const int default_hi = static_cast<int>(std::ceil(2.0 * std::log(n + 1.0) / std::log(spec.M))) + 5;
  const auto range = range_from(j, {0, default_hi});
  if (range.lo < 0 || range.lo > range.hi) throw ConfigError("search_range: need 0 <= lo <= hi");

  if (spec.tau2 > 0.0) warn("eps_upper column uses the tau2 = 0 bound");
  tree::TreeModelSpec bound_spec = spec;
  bound_spec.tau2 = 0.0;
  const auto sums = tree::depth_sums(n, spec.M, range.hi);
  CsvTable t;
  t.header = {"r", "eps_exact", "eps_upper", "A_r"};
  ErrorCurve exact{CurveKind::EpsExact, range.lo, {}, n}, upper{CurveKind::EpsUpper, range.lo, {}, n},
      a{CurveKind::EpsExact, range.lo, {}, n};
  for (int r = range.lo; r <= range.hi; ++r) {
    const double e = tree::exact_eps(spec, sums, r);
    const double u = tree::eps_upper_bound(bound_spec, n, r);
    t.add_row({static_cast<double>(r), e, u, spec.profile(r)});
    exact.values.push_back(e);
    upper.values.push_back(u);
    a.values.push_back(spec.profile(r));
  }
  const fs::path dir = c.out_dir;
  write_table(dir, "tree_curve.csv", t);
  if (c.svg)
    write_svg(dir, "tree_curve.svg",
              {curve_series("eps exact", exact), curve_series("eps upper", upper), curve_series("A(r)", a)},
              {spec.profile.describe() + ", M=" + std::to_string(spec.M) + ", n=" + std::to_string(n), "r", "error",
               true});
  return 0;
}

int cmd_figure(const Common& c) {
  Json j = resolve_config(c);
  const std::string figure = string_field(j, "figure", "");
  const fs::path dir = c.out_dir;
  if (figure == "double_descent" || figure == "multi_descent") {
    if (!j.contains("profile")) {
      j["profile"] = figure == "double_descent"
                         ? Json{{"kind", "double_descent"}, {"params", {{"r_low", 30}, {"r_high", 60}}}}
                         : Json{{"kind", "multi_descent"},
                                {"params", {{"segments", {{30, 60}, {90, 120}, {150, 180}, {210, 240}}}}}};
    }
    if (!j.contains("n")) j["n"] = figure == "double_descent" ? 100 : 300;
    return run_descent(j, dir, true, figure);
  }
  if (figure == "estimator_bias") {
    j["bias_curves"] = true;
    Json summary = Json::array();
    simulate_one(experiment_from_json(j), dir, "", true, true, summary);
    return 0;
  }
  if (figure == "rates") return run_rates(j, dir, true, "rates");
  throw ConfigError("figure: expected double_descent, multi_descent, estimator_bias or rates");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-resolution prediction: exact error curves, resolution selection and rate probes"};
  app.require_subcommand(1);

  Common common;
  const char* env_out = std::getenv("MRPRED_OUT_DIR");
  common.out_dir = env_out && *env_out ? env_out : ".";

  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const Common&);
  };
  const Entry entries[] = {
      {"curve", "exact PE, A(r) and estimation error for a linear model", cmd_curve},
      {"simulate", "Monte Carlo resolution-selection table (Oracle/CV/UE/IC)", cmd_simulate},
      {"descent", "exact PE curve with local minima for descent profiles", cmd_descent},
      {"rates", "argmin rate probe along a grid of n", cmd_rates},
      {"ordering", "bias under a permuted covariate ordering", cmd_ordering},
      {"tree-curve", "exact and upper-bound estimation error of the tree model", cmd_tree_curve},
      {"figure", "regenerate a figure (CSV + SVG)", cmd_figure},
  };

  std::uint64_t seed = 0;
  int workers = 1;
  int (*chosen)(const Common&) = nullptr;
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("--config", common.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", common.out_dir, "output directory (default: $MRPRED_OUT_DIR or .)");
    sub->add_flag("--svg", common.svg, "also write an SVG chart");
    sub->add_option("--set", common.sets, "override a config value, key.path=json")->take_all();
    sub->add_option("--seed", seed, "master seed")->each([&](const std::string&) { common.seed = seed; });
    sub->add_option("--workers", workers, "worker threads")->each([&](const std::string&) {
      common.workers = workers;
    });
    sub->callback([&chosen, run = e.run] { chosen = run; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return chosen(common);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const FitError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const Json::exception& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
