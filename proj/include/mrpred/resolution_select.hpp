#pragma once

#include <string>
#include <vector>

#include "mrpred/bias_profile.hpp"
#include "mrpred/error_curve.hpp"
#include "mrpred/linear_model.hpp"

namespace mrpred {

enum class Method { Oracle, CV, UE, IC };

std::string to_string(Method m);
// Accepts "oracle", "cv", "ue", "ic" (any case). Throws ConfigError.
Method parse_method(const std::string& tag);

struct SearchRange {
  int lo = 0;
  int hi = 0;
};

// Smallest r in [range.lo, range.hi] attaining the minimum of the curve.
// Throws DomainError for an empty range or one the curve does not cover.
int argmin_resolution(const ErrorCurve& curve, SearchRange range);
int argmin_resolution(const ErrorCurve& curve);

// Resolutions whose existing neighbours on the curve's grid are all strictly
// larger. Endpoints have a single neighbour; plateaus yield nothing.
std::vector<int> local_minima(const ErrorCurve& curve);

ErrorCurve exact_pe_curve(const linear::LinearModelSpec& spec, int n, SearchRange range);

struct SelectionReport {
  Method method = Method::Oracle;
  int chosen_r = 0;
  ErrorCurve curve;
  SearchRange search_range;
};

// Largest admissible upper end of the search range for each method:
// n-3 for Oracle and UE, n-2 for CV, n-1 for IC.
int max_search_resolution(Method m, int n);

SelectionReport select(Method m, const linear::NestedLeastSquares& fits, const linear::LinearModelSpec& spec,
                       SearchRange range);
SelectionReport select(Method m, const linear::TrainingSet& T, const linear::LinearModelSpec& spec,
                       SearchRange range);

// ---------------------------------------------------------------------------
// Rate probes: R_n = argmin_r [A(r) + eps(r, n)] along a grid of n.

struct ErrorModel {
  enum class Kind { Polynomial, Exponential, LinearExact, LinearZero, TreeExact, TreeUpper };
  Kind kind = Kind::Polynomial;
  double alpha = 1.0;  // Polynomial: r^alpha / n; Exponential: alpha^r / n
  double tau2 = 0.0;   // LinearExact, TreeExact
  int M = 2;           // tree models

  void validate() const;
  std::string describe() const;
};

// "poly", "expo", "linear-exact", "linear-zero", "tree-exact", "tree-upper".
ErrorModel::Kind parse_error_model(const std::string& tag);
std::string to_string(ErrorModel::Kind kind);

enum class RateTransform {
  LogLossVsLogN,  // log L_n = slope * log n + intercept
  RVsLogN,        // R_n = slope * log n + intercept
  ROverNVsLogN,   // R_n / n = slope * log n + intercept
};
std::string to_string(RateTransform t);
RateTransform parse_rate_transform(const std::string& tag);

struct RatePoint {
  int n = 0;
  int R = 0;
  double L = 0.0;
  int r_cap = 0;
  bool interior = true;  // argmin strictly below the scanned cap, or cap at the domain edge
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares line through (x, y).
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct RateFitReport {
  std::string profile;
  std::string error_model;
  RateTransform transform = RateTransform::LogLossVsLogN;
  std::vector<RatePoint> points;
  int fit_first = 0;  // index of the first grid point used in the fit
  LineFit fit;
  bool all_interior = true;
};

// Loss A(r) + eps(r, n) for one resolution, excluding tau2.
double model_loss(const BiasProfile& profile, const ErrorModel& model, int n, int r);

// Minimises over r in [0, r_cap(n)]; the cap starts at ten times the
// predicted order of R_n (limited to 1e6 and the model's domain) and doubles
// while the argmin sits on it. The smallest 20% of the grid are left out of
// the fit.
RateFitReport rate_probe(const BiasProfile& profile, const ErrorModel& model, const std::vector<int>& n_grid,
                         RateTransform transform, int workers = 1);

// n = round(10^(lo + step*i)) for i = 0..count-1.
std::vector<int> log10_grid(double lo, double hi, int count);

// ---------------------------------------------------------------------------
// Covariate orderings.

struct PermutationSpec {
  enum class Kind { Identity, ConstantDelay, FractionDelay, LogGap };
  Kind kind = Kind::Identity;
  double param = 0.0;  // c, gamma or a

  void validate() const;
  std::string describe() const;
  // Number of original covariates that must appear among the first j positions.
  int required(int j) const;
};
PermutationSpec::Kind parse_permutation(const std::string& tag);

// Realised ordering of length `horizon`: order[j-1] is the original index of
// the covariate placed at position j. Positions not claimed by the schedule
// take covariates from beyond the horizon, in increasing order.
std::vector<int> build_ordering(const PermutationSpec& perm, int horizon);

// M_r: number of the first r positions holding a covariate outside 1..r.
int count_mistakes(const std::vector<int>& order, int r);

// A'(r) = sum of increments of the covariates not among the first r positions.
double permuted_bias(const BiasProfile& profile, const std::vector<int>& order, int r);

struct OrderingRow {
  int r = 0;
  int mistakes = 0;
  double A = 0.0;
  double A_perm = 0.0;
  double A_shifted = 0.0;  // A(r - M_r)
};

struct OrderingRatePoint {
  int n = 0;
  int R = 0;
  double A = 0.0;
  double A_perm = 0.0;
  double ratio = 0.0;
};

struct OrderingReport {
  std::string profile;
  std::string permutation;
  std::string error_model;
  std::vector<OrderingRow> rows;
  std::vector<OrderingRatePoint> points;
  double max_ratio = 0.0;
  bool nested_inequality_holds = true;  // A'(r) <= A(r - M_r) at every r
};

OrderingReport ordering_experiment(const BiasProfile& profile, const PermutationSpec& perm,
                                   const std::vector<int>& n_grid, const ErrorModel& model, int workers = 1);

}  // namespace mrpred
