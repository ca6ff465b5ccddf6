#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "mrpred/bias_profile.hpp"

namespace mrpred::linear {

// Y = beta0 + sum_k beta_k X_k + eta with X_k iid N(0,1), eta ~ N(0, tau2)
// and beta_k = sqrt(A(k-1) - A(k)), so that the resolution bias is A.
struct LinearModelSpec {
  BiasProfile profile;
  double tau2 = 0.0;
  double beta0 = 0.0;

  void validate() const;
  double coefficient(int k) const;
  // theta*_r = (beta0, beta_1, ..., beta_r).
  Eigen::VectorXd true_coefficients(int r) const;
};

// One sampled training set. Column 0 of `covariates` is the intercept.
struct TrainingSet {
  int n = 0;
  int r_max = 0;
  Eigen::MatrixXd covariates;  // n x (r_max + 1)
  Eigen::VectorXd responses;   // n
  std::uint64_t seed = 0;
};

// Draws covariates 1..r_max and folds the unobserved tail sum_{k > r_max}
// beta_k X_k into the noise, which is then N(0, tau2 + A(r_max)). The law of
// (Y, X_0..X_{r_max}) is exactly that of the infinite model.
TrainingSet sample_training(const LinearModelSpec& spec, int n, int r_max, std::uint64_t seed);

// Closed forms averaged over training sets of size n; all require
// 0 <= r <= n - 3 and throw DomainError otherwise.
double exact_pe(const LinearModelSpec& spec, int n, int r);
double exact_eps(const LinearModelSpec& spec, int n, int r);
// E[CV_n(r)] = PE_{n-1}(r); requires r <= n - 4.
double expected_cv(const LinearModelSpec& spec, int n, int r);
// E[IC_n(r)] = [tau2 + A(r)] (n - r - 1)(n + 2r + 2) / n^2; requires r + 1 <= n.
double expected_ic(const LinearModelSpec& spec, int n, int r);
// E[sigma_hat^2_r] = (n - r - 1) / n [tau2 + A(r)]; requires r + 1 <= n.
double expected_sigma_hat2(const LinearModelSpec& spec, int n, int r);

// Least squares on the first r + 1 covariates via column-pivoted QR.
// Throws FitError when r + 1 > n or the design is rank deficient.
Eigen::VectorXd ols_fit(const TrainingSet& T, int r);

// ||theta_hat - theta*_r||^2, the estimation error under iid N(0,1) covariates.
double estimation_error(const Eigen::VectorXd& theta_hat, const LinearModelSpec& spec, int r);

double sigma_hat2(const TrainingSet& T, int r);
double cv_error(const TrainingSet& T, int r);
double ue_error(const TrainingSet& T, int r);
double ic_error(const TrainingSet& T, int r);

// Penalty multipliers applied to sigma_hat^2.
double ue_factor(int n, int r);
double ic_factor(int n, int r);

// Leverage at or above this value makes leave-one-out CV degenerate.
inline constexpr double kLeverageTolerance = 1e-10;

// All resolutions 0..r_hi from a single Householder factorisation of the
// widest design. The leading (r+1) columns of Q and block of R factor the
// first r + 1 covariates, so residuals and leverages nest in r.
class NestedLeastSquares {
 public:
  NestedLeastSquares(const TrainingSet& T, int r_hi);

  int n() const { return n_; }
  int r_hi() const { return r_hi_; }

  double sigma_hat2(int r) const;
  double cv(int r) const;
  double ue(int r) const;
  double ic(int r) const;
  double max_leverage(int r) const;
  Eigen::VectorXd coefficients(int r) const;

 private:
  void check(int r) const;

  int n_;
  int r_hi_;
  Eigen::MatrixXd r_factor_;  // (r_hi+1) x (r_hi+1) upper triangle
  Eigen::VectorXd qty_;       // Q^T y, leading r_hi + 1 entries
  std::vector<double> sigma2_;
  std::vector<double> cv_;
  std::vector<double> max_leverage_;
};

// CSV with header y,x0,x1,...; numbers printed with 17 significant digits.
void write_csv(const TrainingSet& T, std::ostream& os);
TrainingSet read_csv(std::istream& is);

}  // namespace mrpred::linear
