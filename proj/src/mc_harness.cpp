#include "mrpred/mc_harness.hpp"

#include <algorithm>
#include <cmath>

#include "mrpred/binomial.hpp"
#include "mrpred/errors.hpp"
#include "mrpred/parallel.hpp"
#include "mrpred/rng.hpp"

namespace mrpred {

void ExperimentConfig::validate() const {
  if (family != "linear")
    throw ConfigError("family: table experiments need the linear family (got '" + family + "')");
  if (!std::isfinite(tau2) || tau2 < 0.0) throw ConfigError("tau2: must be finite and >= 0");
  if (!std::isfinite(beta0)) throw ConfigError("beta0: must be finite");
  if (n < 4) throw ConfigError("n: must be >= 4");
  if (reps < 1) throw ConfigError("reps: must be >= 1");
  if (workers < 1) throw ConfigError("workers: must be >= 1");
  if (methods.empty()) throw ConfigError("methods: at least one method is required");
  if (search_range.lo < 0 || search_range.lo > search_range.hi)
    throw ConfigError("search_range: need 0 <= lo <= hi");
  for (Method m : methods)
    if (search_range.hi > max_search_resolution(m, n))
      throw ConfigError("search_range: " + to_string(m) + " needs hi <= " +
                        std::to_string(max_search_resolution(m, n)) + " at n=" + std::to_string(n));
  if (search_range.hi > n - 3) throw ConfigError("search_range: hi must be <= n-3 to standardize by PE_n");
  if (r_max_generation >= 0 && r_max_generation < search_range.hi)
    throw ConfigError("r_max_generation: must cover the search range");
}

linear::LinearModelSpec ExperimentConfig::linear_spec() const { return {profile, tau2, beta0}; }

int ExperimentConfig::generation_resolution() const {
  return r_max_generation >= 0 ? r_max_generation : search_range.hi;
}

namespace {

int oracle_resolution(const ExperimentConfig& config) {
  return argmin_resolution(exact_pe_curve(config.linear_spec(), config.n, config.search_range));
}

ReplicationRecord replicate(const ExperimentConfig& config, int rep_index, int r_opt, double pe_opt) {
  const auto spec = config.linear_spec();
  ReplicationRecord rec;
  rec.rep_index = rep_index;
  rec.seed = child_seed(config.master_seed, static_cast<std::uint64_t>(rep_index));
  const auto T = linear::sample_training(spec, config.n, config.generation_resolution(), rec.seed);
  const linear::NestedLeastSquares fits(T, config.search_range.hi);
  for (Method m : config.methods) {
    const int r = m == Method::Oracle ? r_opt : select(m, fits, spec, config.search_range).chosen_r;
    const double pe = config.tau2 + spec.profile(r) + linear::estimation_error(fits.coefficients(r), spec, r);
    rec.chosen_r.push_back(r);
    rec.std_pe.push_back(pe / pe_opt);
  }
  return rec;
}

}  // namespace

ReplicationRecord run_replication(const ExperimentConfig& config, int rep_index) {
  config.validate();
  if (rep_index < 0 || rep_index >= config.reps) throw DomainError("run_replication: rep_index outside [0, reps)");
  const int r_opt = oracle_resolution(config);
  return replicate(config, rep_index, r_opt, linear::exact_pe(config.linear_spec(), config.n, r_opt));
}

TableReport run_table_experiment(const ExperimentConfig& config, std::vector<ReplicationRecord>* records) {
  config.validate();
  TableReport rep;
  rep.profile = config.profile.describe();
  rep.tau2 = config.tau2;
  rep.n = config.n;
  rep.reps = config.reps;
  rep.r_opt = oracle_resolution(config);
  rep.pe_opt = linear::exact_pe(config.linear_spec(), config.n, rep.r_opt);

  std::vector<ReplicationRecord> recs(config.reps);
  parallel_for(config.reps, config.workers,
               [&](int i) { recs[i] = replicate(config, i, rep.r_opt, rep.pe_opt); });

  for (std::size_t j = 0; j < config.methods.size(); ++j) {
    std::vector<double> R, spe;
    R.reserve(recs.size());
    spe.reserve(recs.size());
    for (const auto& r : recs) {
      R.push_back(r.chosen_r[j]);
      spe.push_back(r.std_pe[j]);
    }
    TableRow row;
    row.method = config.methods[j];
    row.mean_R = mean(R);
    row.qr_lo_R = nearest_rank_quantile(R, 0.025);
    row.qr_hi_R = nearest_rank_quantile(R, 0.975);
    row.mean_std_pe = mean(spe);
    row.qr_lo_std_pe = nearest_rank_quantile(spe, 0.025);
    row.qr_hi_std_pe = nearest_rank_quantile(spe, 0.975);
    rep.rows.push_back(row);
  }
  if (records) *records = std::move(recs);
  return rep;
}

BiasCurves estimator_bias_curves(const ExperimentConfig& config) {
  config.validate();
  const auto spec = config.linear_spec();
  const int lo = config.search_range.lo;
  const int hi = config.search_range.hi;
  const int width = hi - lo + 1;
  // CV needs r + 1 <= n - 1, which the search range already guarantees.
  std::vector<std::vector<double>> cv(width), ue(width), ic(width), s2(width);
  for (int k = 0; k < width; ++k) {
    cv[k].resize(config.reps);
    ue[k].resize(config.reps);
    ic[k].resize(config.reps);
    s2[k].resize(config.reps);
  }
  parallel_for(config.reps, config.workers, [&](int i) {
    const auto seed = child_seed(config.master_seed, static_cast<std::uint64_t>(i));
    const auto T = linear::sample_training(spec, config.n, config.generation_resolution(), seed);
    const linear::NestedLeastSquares fits(T, hi);
    for (int r = lo; r <= hi; ++r) {
      cv[r - lo][i] = fits.cv(r);
      ue[r - lo][i] = fits.ue(r);
      ic[r - lo][i] = fits.ic(r);
      s2[r - lo][i] = fits.sigma_hat2(r);
    }
  });

  auto make = [&](CurveKind kind) {
    ErrorCurve c;
    c.kind = kind;
    c.first_r = lo;
    c.n = config.n;
    c.values.resize(width);
    return c;
  };
  BiasCurves out;
  out.exact_pe = exact_pe_curve(spec, config.n, config.search_range);
  out.cv_mean = make(CurveKind::CV);
  out.ue_mean = make(CurveKind::UE);
  out.ic_mean = make(CurveKind::IC);
  out.sigma_hat2_mean = make(CurveKind::SigmaHat2);
  out.cv_se = make(CurveKind::CV);
  out.ue_se = make(CurveKind::UE);
  out.ic_se = make(CurveKind::IC);
  out.sigma_hat2_se = make(CurveKind::SigmaHat2);
  for (int k = 0; k < width; ++k) {
    out.cv_mean.values[k] = mean(cv[k]);
    out.ue_mean.values[k] = mean(ue[k]);
    out.ic_mean.values[k] = mean(ic[k]);
    out.sigma_hat2_mean.values[k] = mean(s2[k]);
    out.cv_se.values[k] = standard_error(cv[k]);
    out.ue_se.values[k] = standard_error(ue[k]);
    out.ic_se.values[k] = standard_error(ic[k]);
    out.sigma_hat2_se.values[k] = standard_error(s2[k]);
  }
  return out;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw DomainError("mean: no values");
  CompensatedSum s;
  for (double v : values) s.add(v);
  return s.value() / static_cast<double>(values.size());
}

double standard_error(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  CompensatedSum ss;
  for (double v : values) ss.add((v - m) * (v - m));
  const double size = static_cast<double>(values.size());
  return std::sqrt(ss.value() / (size - 1.0) / size);
}

double nearest_rank_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("quantile: no values");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile: p must lie in [0, 1]");
  const auto size = static_cast<long long>(values.size());
  long long k = static_cast<long long>(std::ceil(p * static_cast<double>(size) - 1e-12));
  k = std::clamp(k, 1LL, size);
  std::nth_element(values.begin(), values.begin() + (k - 1), values.end());
  return values[k - 1];
}

}  // namespace mrpred
