#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "mrpred/errors.hpp"
#include "mrpred/linear_model.hpp"
#include "mrpred/rng.hpp"

using namespace mrpred;
using namespace mrpred::linear;
using Catch::Approx;

namespace {

// Leave-one-out by refitting n times with a fresh solver.
double literal_cv(const TrainingSet& T, int r) {
  double sum = 0.0;
  for (int i = 0; i < T.n; ++i) {
    Eigen::MatrixXd X(T.n - 1, r + 1);
    Eigen::VectorXd y(T.n - 1);
    for (int a = 0, row = 0; a < T.n; ++a) {
      if (a == i) continue;
      X.row(row) = T.covariates.row(a).head(r + 1);
      y[row] = T.responses[a];
      ++row;
    }
    const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
    const double e = T.responses[i] - T.covariates.row(i).head(r + 1).dot(beta);
    sum += e * e;
  }
  return sum / T.n;
}

struct Moments {
  double mean = 0, se = 0;
};

template <class F>
Moments monte_carlo(int reps, F f) {
  double s = 0, ss = 0;
  for (int i = 0; i < reps; ++i) {
    const double v = f(i);
    s += v;
    ss += v * v;
  }
  Moments m;
  m.mean = s / reps;
  m.se = std::sqrt((ss / reps - m.mean * m.mean) / (reps - 1));
  return m;
}

const LinearModelSpec kPoly{BiasProfile::polynomial(1.0), 0.5, 0.0};

}  // namespace

TEST_CASE("exact PE closed form at the table points") {
  CHECK(exact_pe(kPoly, 50, 7) == Approx(0.74634).margin(5e-5));
  CHECK(exact_pe({BiasProfile::exponential(1.0), 0.5, 0.0}, 200, 6) == Approx(0.5208).margin(5e-5));
  CHECK(exact_pe({BiasProfile::exponential(1.0), 0.0, 0.0}, 50, 47) == Approx(1.90e-19).epsilon(5e-3));
}

TEST_CASE("exact estimation error") {
  CHECK(exact_eps(kPoly, 50, 10) == Approx((0.5 + 1.0 / 11) / 38 * (0.96 + 10)).epsilon(1e-14));
  CHECK(exact_eps(kPoly, 50, 10) == Approx(3562.0 / 20900.0).epsilon(1e-14));
  CHECK(exact_eps({BiasProfile::hard_threshold(3), 0.0, 0.0}, 40, 5) == 0.0);
}

TEST_CASE("trio identity and domain") {
  const std::vector<LinearModelSpec> specs{kPoly,
                                           {BiasProfile::exponential(1.0), 0.0, 1.0},
                                           {BiasProfile::logarithmic(2.0), 3.0, 0.0},
                                           {BiasProfile::double_descent(30, 60), 0.1, 0.0}};
  for (const auto& spec : specs)
    for (int n : {4, 10, 50, 200})
      for (int r = 0; r <= n - 3; ++r)
        CHECK(std::abs(exact_pe(spec, n, r) - spec.tau2 - spec.profile(r) - exact_eps(spec, n, r)) < 1e-12);
  CHECK_THROWS_AS(exact_pe(kPoly, 50, 48), DomainError);
  CHECK_THROWS_AS(exact_eps(kPoly, 50, 48), DomainError);
  CHECK_THROWS_AS(expected_cv(kPoly, 50, 47), DomainError);
  CHECK(expected_cv(kPoly, 50, 10) == exact_pe(kPoly, 49, 10));
}

TEST_CASE("estimator penalties and expectations") {
  CHECK(ue_factor(50, 47) == Approx(1224.0).epsilon(1e-15));
  CHECK(ic_factor(50, 10) == Approx(1.44).epsilon(1e-15));
  CHECK(expected_sigma_hat2(kPoly, 50, 7) == Approx(0.525).epsilon(1e-14));
  const double ratio = expected_ic(kPoly, 50, 45) / exact_pe(kPoly, 50, 45);
  CHECK(ratio == Approx(4.0 * 142 * 3 / (50.0 * 51 * 48)).epsilon(1e-12));
  const double ratio_small_r = expected_ic(kPoly, 1000, 3) / exact_pe(kPoly, 1000, 3);
  CHECK(ratio_small_r >= 0.999);
  CHECK(ratio_small_r <= 1.001);
}

TEST_CASE("PE blows up near n-3 and decreases without noise") {
  for (const auto& profile :
       {BiasProfile::exponential(1.0), BiasProfile::polynomial(1.0), BiasProfile::logarithmic(1.0)}) {
    const LinearModelSpec spec{profile, 0.5, 0.0};
    double best = INFINITY;
    for (int r = 0; r <= 47; ++r) best = std::min(best, exact_pe(spec, 50, r));
    CHECK(exact_pe(spec, 50, 47) >= 10 * best);
  }
  const LinearModelSpec det{BiasProfile::exponential(1.0), 0.0, 0.0};
  for (int r = 0; r < 47; ++r) CHECK(exact_pe(det, 50, r + 1) < exact_pe(det, 50, r));
}

TEST_CASE("sampling") {
  SECTION("determinism") {
    const auto a = sample_training(kPoly, 20, 6, 99);
    const auto b = sample_training(kPoly, 20, 6, 99);
    CHECK(a.covariates == b.covariates);
    CHECK(a.responses == b.responses);
    CHECK(a.covariates.col(0).isOnes());
    CHECK(sample_training(kPoly, 20, 6, 100).responses != a.responses);
  }
  SECTION("no-signal case is pure noise") {
    const LinearModelSpec spec{BiasProfile::tabulated({}), 1.0, 0.0};
    std::vector<double> y;
    for (int s = 0; s < 20000; ++s) {
      const auto T = sample_training(spec, 3, 0, s);
      for (int i = 0; i < 3; ++i) y.push_back(T.responses[i]);
    }
    double m = 0, v = 0;
    for (double x : y) m += x;
    m /= y.size();
    for (double x : y) v += (x - m) * (x - m);
    v /= y.size() - 1;
    CHECK(std::abs(m) < 4 * std::sqrt(1.0 / y.size()));
    CHECK(std::abs(v - 1.0) < 4 * std::sqrt(2.0 / y.size()));
  }
  SECTION("pooled variance matches tau2 + A(0)") {
    const LinearModelSpec spec{BiasProfile::exponential(1.0), 0.5, 0.0};
    std::vector<double> y;
    for (int s = 0; s < 2000; ++s) {
      const auto T = sample_training(spec, 50, 47, 1000 + s);
      for (int i = 0; i < 50; ++i) y.push_back(T.responses[i]);
    }
    double m = 0, v = 0, m4 = 0;
    for (double x : y) m += x;
    m /= y.size();
    for (double x : y) v += (x - m) * (x - m);
    v /= y.size() - 1;
    for (double x : y) m4 += std::pow(x - m, 4);
    m4 /= y.size();
    const double se = std::sqrt((m4 - v * v) / y.size());
    CHECK(std::abs(v - 1.5) < 3 * se);
  }
  CHECK_THROWS_AS(sample_training(kPoly, 0, 3, 1), ConfigError);
  CHECK_THROWS_AS(sample_training({BiasProfile::polynomial(1.0), -1.0, 0.0}, 5, 3, 1), ConfigError);
  CHECK_THROWS_AS(sample_training({BiasProfile::polynomial(1.0), 0.5, NAN}, 5, 3, 1), ConfigError);
}

TEST_CASE("least squares") {
  SECTION("intercept only is the mean") {
    const auto T = sample_training(kPoly, 15, 3, 7);
    CHECK(ols_fit(T, 0)[0] == Approx(T.responses.mean()).epsilon(1e-13));
    CHECK(NestedLeastSquares(T, 3).coefficients(0)[0] == Approx(T.responses.mean()).epsilon(1e-13));
  }
  SECTION("hand-solved 2x2") {
    TrainingSet T;
    T.n = 4;
    T.r_max = 1;
    T.covariates.resize(4, 2);
    T.covariates << 1, 0, 1, 1, 1, 2, 1, 4;
    T.responses.resize(4);
    T.responses << 1, 3, 2, 6;
    // xbar = 7/4, ybar = 3, Sxy = 10, Sxx = 8.75
    const auto theta = ols_fit(T, 1);
    CHECK(theta[1] == Approx(10.0 / 8.75).epsilon(1e-13));
    CHECK(theta[0] == Approx(3.0 - 10.0 / 8.75 * 1.75).epsilon(1e-13));
    const auto nested = NestedLeastSquares(T, 1).coefficients(1);
    CHECK(nested[1] == Approx(theta[1]).epsilon(1e-12));
  }
  SECTION("noiseless exact fit") {
    const LinearModelSpec spec{BiasProfile::hard_threshold(3), 0.0, 0.7};
    const auto T = sample_training(spec, 12, 6, 11);
    for (int r = 3; r <= 6; ++r) {
      CHECK(sigma_hat2(T, r) < 1e-20);
      CHECK(estimation_error(ols_fit(T, r), spec, r) < 1e-18);
    }
    const auto T2 = sample_training({BiasProfile::hard_threshold(2), 0.0, 0.0}, 10, 2, 5);
    CHECK(estimation_error(ols_fit(T2, 2), {BiasProfile::hard_threshold(2), 0.0, 0.0}, 2) < 1e-18);
  }
  SECTION("estimation error at the truth") {
    CHECK(estimation_error(kPoly.true_coefficients(5), kPoly, 5) == 0.0);
  }
  SECTION("rank deficiency") {
    const auto T = sample_training(kPoly, 4, 5, 3);
    CHECK_THROWS_AS(ols_fit(T, 4), FitError);
    CHECK_THROWS_WITH(ols_fit(T, 4), Catch::Matchers::ContainsSubstring("not unique"));
    CHECK_THROWS_AS(NestedLeastSquares(T, 5), FitError);
    CHECK(sigma_hat2(T, 3) < 1e-20);
  }
}

TEST_CASE("leave-one-out identity") {
  SECTION("fixed n=12, r=3") {
    const auto T = sample_training(kPoly, 12, 3, 2024);
    CHECK(cv_error(T, 3) == Approx(literal_cv(T, 3)).epsilon(1e-10));
  }
  SECTION("random small instances") {
    std::mt19937_64 pick(5);
    for (int trial = 0; trial < 60; ++trial) {
      const int n = 4 + static_cast<int>(pick() % 17);
      const int r = static_cast<int>(pick() % std::min(6, n - 2));
      const auto T = sample_training(kPoly, n, r, 500 + trial);
      const NestedLeastSquares fits(T, r);
      for (int k = 0; k <= r; ++k) {
        INFO("n=" << n << " r=" << k);
        CHECK(std::abs(fits.cv(k) - literal_cv(T, k)) <= 1e-10 * std::max(1.0, literal_cv(T, k)));
      }
    }
  }
  SECTION("intercept only") {
    const auto T = sample_training(kPoly, 9, 2, 8);
    const double ybar = T.responses.mean();
    double expect = 0;
    for (int i = 0; i < 9; ++i) expect += std::pow((T.responses[i] - ybar) * 9.0 / 8.0, 2);
    CHECK(cv_error(T, 0) == Approx(expect / 9).epsilon(1e-12));
  }
  SECTION("degenerate fits") {
    const auto T = sample_training(kPoly, 6, 5, 1);
    CHECK_THROWS_AS(cv_error(T, 5), FitError);
    CHECK_THROWS_WITH(cv_error(T, 5), Catch::Matchers::ContainsSubstring("degenerate leave-one-out"));
  }
}

TEST_CASE("nested fits agree with separate fits") {
  const auto T = sample_training(kPoly, 30, 12, 77);
  const NestedLeastSquares fits(T, 12);
  for (int r = 0; r <= 12; ++r) {
    const auto theta = ols_fit(T, r);
    CHECK((fits.coefficients(r) - theta).norm() < 1e-10);
    const double rss = (T.responses - T.covariates.leftCols(r + 1) * theta).squaredNorm() / 30;
    CHECK(fits.sigma_hat2(r) == Approx(rss).epsilon(1e-10));
    CHECK(fits.ue(r) == Approx(rss * ue_factor(30, r)).epsilon(1e-10));
    CHECK(fits.ic(r) == Approx(rss * ic_factor(30, r)).epsilon(1e-10));
  }
}

TEST_CASE("Monte Carlo means match closed forms") {
  const int reps = 5000;
  const int n = 50, r = 10;
  std::vector<double> ue(reps), cv(reps), s2(reps), ic(reps), eps(reps);
  for (int i = 0; i < reps; ++i) {
    const auto T = sample_training(kPoly, n, r, child_seed(42, i));
    const NestedLeastSquares f(T, r);
    ue[i] = f.ue(r);
    cv[i] = f.cv(r);
    s2[i] = f.sigma_hat2(r);
    ic[i] = f.ic(r);
    eps[i] = estimation_error(f.coefficients(r), kPoly, r);
  }
  auto check = [&](const std::vector<double>& v, double target) {
    const auto m = monte_carlo(reps, [&](int i) { return v[i]; });
    INFO("mean " << m.mean << " target " << target << " se " << m.se);
    CHECK(std::abs(m.mean - target) < 3 * m.se);
  };
  check(ue, exact_pe(kPoly, n, r));
  check(cv, exact_pe(kPoly, n - 1, r));
  check(s2, expected_sigma_hat2(kPoly, n, r));
  check(ic, expected_ic(kPoly, n, r));
  check(eps, exact_eps(kPoly, n, r));
}

TEST_CASE("csv round trip") {
  const auto T = sample_training(kPoly, 7, 3, 5);
  std::stringstream ss;
  write_csv(T, ss);
  CHECK(ss.str().rfind("y,x0,x1,x2,x3\n", 0) == 0);
  const auto back = read_csv(ss);
  CHECK(back.n == 7);
  CHECK(back.r_max == 3);
  CHECK(back.covariates == T.covariates);
  CHECK(back.responses == T.responses);
  std::stringstream bad("y,x1\n1,2\n");
  CHECK_THROWS_AS(read_csv(bad), ConfigError);
}
