#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrpred/bias_profile.hpp"
#include "mrpred/error_curve.hpp"
#include "mrpred/linear_model.hpp"
#include "mrpred/resolution_select.hpp"

namespace mrpred {

struct ExperimentConfig {
  std::string family = "linear";
  BiasProfile profile = BiasProfile::exponential(1.0);
  double tau2 = 0.5;
  double beta0 = 0.0;
  int n = 50;
  int reps = 500;
  SearchRange search_range{0, 47};
  std::vector<Method> methods{Method::Oracle, Method::CV, Method::UE, Method::IC};
  std::uint64_t master_seed = 20240101;
  int r_max_generation = -1;  // < 0: the top of the search range
  int workers = 1;

  // Throws ConfigError naming the offending field.
  void validate() const;
  linear::LinearModelSpec linear_spec() const;
  int generation_resolution() const;
};

// Chosen resolution and standardized prediction error per method, in the
// order of config.methods.
struct ReplicationRecord {
  int rep_index = 0;
  std::uint64_t seed = 0;
  std::vector<int> chosen_r;
  std::vector<double> std_pe;
};

// Prediction error of the fit at resolution r on this training set:
// tau2 + A(r) + ||theta_hat_r - theta*_r||^2, divided by PE_n(r_opt).
ReplicationRecord run_replication(const ExperimentConfig& config, int rep_index);

struct TableRow {
  Method method = Method::Oracle;
  double mean_R = 0.0;
  double qr_lo_R = 0.0;
  double qr_hi_R = 0.0;
  double mean_std_pe = 0.0;
  double qr_lo_std_pe = 0.0;
  double qr_hi_std_pe = 0.0;
};

struct TableReport {
  std::string profile;
  double tau2 = 0.0;
  int n = 0;
  int reps = 0;
  int r_opt = 0;
  double pe_opt = 0.0;
  std::vector<TableRow> rows;
};

// Means and nearest-rank 2.5% / 97.5% order statistics over replications.
// `records`, when given, receives the per-replication records in index order.
TableReport run_table_experiment(const ExperimentConfig& config, std::vector<ReplicationRecord>* records = nullptr);

// Monte Carlo means (and standard errors) of each estimator over the search
// range, with the exact PE_n(r) curve alongside.
struct BiasCurves {
  ErrorCurve exact_pe;
  ErrorCurve cv_mean, ue_mean, ic_mean, sigma_hat2_mean;
  ErrorCurve cv_se, ue_se, ic_se, sigma_hat2_se;
};
BiasCurves estimator_bias_curves(const ExperimentConfig& config);

double mean(std::span<const double> values);
// Sample standard deviation divided by sqrt(size); 0 for fewer than two values.
double standard_error(std::span<const double> values);
// Order statistic x_(k) with k = ceil(p N), clamped to [1, N].
double nearest_rank_quantile(std::vector<double> values, double p);

}  // namespace mrpred
