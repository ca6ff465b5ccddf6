#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "mrpred/bias_profile.hpp"

namespace mrpred::tree {

// Regression tree on iid uniform categorical covariates X_1, X_2, ... in
// {1..M}:  Y = beta0 + sum_k beta_k [1(X_k = 1) - 1/M] + eta, with
// beta_k = M / sqrt(M - 1) * sqrt(A(k-1) - A(k)) and Var(eta) = tau2.
struct TreeModelSpec {
  int M = 2;
  BiasProfile profile;
  double tau2 = 0.0;
  double beta0 = 0.0;

  void validate() const;
  double coefficient(int k) const;  // k >= 1
  // E[Y | X_1..X_r = prefix], r = prefix.size().
  double conditional_mean(std::span<const int> prefix) const;
};

// n units observed up to resolution r_max. Rows hold X_1..X_{r_max}
// (X_0 = 1 is implicit). A lexicographic prefix index is built on the first
// lookup and is read-only afterwards, so a fully constructed set can be
// shared between threads.
class CategoricalTrainingSet {
 public:
  CategoricalTrainingSet(int M, int r_max, std::vector<int> covariates, std::vector<double> responses,
                         std::uint64_t seed = 0);
  CategoricalTrainingSet(const CategoricalTrainingSet& other);
  CategoricalTrainingSet& operator=(const CategoricalTrainingSet& other);
  CategoricalTrainingSet(CategoricalTrainingSet&&) noexcept;
  CategoricalTrainingSet& operator=(CategoricalTrainingSet&&) noexcept;
  ~CategoricalTrainingSet();

  int n() const { return static_cast<int>(responses_.size()); }
  int r_max() const { return r_max_; }
  int M() const { return M_; }
  std::uint64_t seed() const { return seed_; }
  std::span<const int> row(int i) const;
  const std::vector<double>& responses() const { return responses_; }

  // n(x_depth): units whose first `depth` covariates equal the prefix.
  int count_matching(std::span<const int> prefix, int depth) const;

  struct Match {
    int depth = 0;  // deepest k <= r with n(x_k) > 0
    int count = 0;  // n(x_depth)
    double mean = 0.0;
  };
  Match deepest_match(std::span<const int> x_prefix, int r) const;

 private:
  struct Index;
  const Index& index() const;

  int M_;
  int r_max_;
  std::vector<int> covariates_;  // row-major n x r_max
  std::vector<double> responses_;
  std::uint64_t seed_;
  mutable std::unique_ptr<Index> index_;
};

// Draws X_1..X_{r_max} and one hidden uniform covariate carrying the tail
// variance A(r_max), so every moment of (Y, X_1..X_{r_max}) matches the
// infinite model.
CategoricalTrainingSet sample_training(const TreeModelSpec& spec, int n, int r_max, std::uint64_t seed);

// Highest-resolution imputation: mean response of the units sharing the
// target's covariates up to the deepest nonempty depth <= r.
double predict_impute(const CategoricalTrainingSet& T, int r, std::span<const int> x_prefix);

// Per-depth binomial expectations for the chain Z_0 = n, Z_{k+1} | Z_k ~
// Binomial(Z_k, 1/M), i.e. Z_k ~ Binomial(n, M^-k). With q = 1 - 1/M:
//   matched_inverse[k]  = E[1(Z_k > 0) / Z_k]
//   fallback_inverse[k] = E[1(Z_k > 0, Z_{k+1} = 0) / Z_k] = sum_z pmf_k(z) q^z / z
//   fallback_mass[k]    = P(Z_k > 0, Z_{k+1} = 0)        = sum_z pmf_k(z) q^z
struct DepthSums {
  int n = 0;
  int M = 2;
  std::vector<double> matched_inverse;
  std::vector<double> fallback_inverse;
  std::vector<double> fallback_mass;

  int max_depth() const { return static_cast<int>(matched_inverse.size()) - 1; }
};
DepthSums depth_sums(int n, int M, int max_depth);

// Expected estimation error E_n[eps(r, T_n)] of the imputation predictor.
// Units used at a fallback depth k are those with X_{k+1} different from the
// target's, which shifts their mean by (M/(M-1)) beta-units and leaves the
// conditional variance tau2 + A(k+1) + M(M-2)/(M-1)^2 delta_{k+1}^2.
double exact_eps(const TreeModelSpec& spec, int n, int r);
double exact_eps(const TreeModelSpec& spec, const DepthSums& sums, int r);

// The three-term decomposition written with the fallback cell treated as an
// unconditioned sample from its parent: variance [A(r)+tau2] E[1/Z_r],
// fallback variance [A(k)+tau2] and fallback bias [A(k)-A(r)]. It is a lower
// approximation of exact_eps.
struct ThreeTerms {
  double matched_variance = 0.0;
  double fallback_variance = 0.0;
  double fallback_bias = 0.0;
  double total() const { return matched_variance + fallback_variance + fallback_bias; }
};
ThreeTerms nominal_terms(const TreeModelSpec& spec, const DepthSums& sums, int r);
double nominal_eps(const TreeModelSpec& spec, int n, int r);

// E[1/(Z+1)] for Z ~ Binomial(n, M^-k) in closed form.
double lemma_a1_mean_inv(int n, int M, int k);

// (2M/n) sum_{k=0}^{r} M^k A(k). Derived for tau2 = 0; warns otherwise.
double eps_upper_bound(const TreeModelSpec& spec, int n, int r);

// (1 - M^-r)^(M^r).
double thinning_b(int M, int r);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int reps = 0;
};

// Monte Carlo average of (theta_hat_r(X_r) - E[Y | X_r])^2 over fresh
// training sets and one fresh target point per replication.
McEstimate mc_eps(const TreeModelSpec& spec, int n, int r, int reps, std::uint64_t seed, int workers = 1);

// CSV with header y,x1,...,x{r_max}; covariates integer coded in 1..M.
void write_csv(const CategoricalTrainingSet& T, std::ostream& os);
CategoricalTrainingSet read_csv(std::istream& is, int M);

}  // namespace mrpred::tree
