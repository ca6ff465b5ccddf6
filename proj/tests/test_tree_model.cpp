#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mrpred/errors.hpp"
#include "mrpred/parallel.hpp"
#include "mrpred/tree_model.hpp"

using namespace mrpred;
using namespace mrpred::tree;
using Catch::Approx;

namespace {

// Expected eps(r, T_n) by enumerating every covariate table and target
// prefix. Given the covariates, Y_i has mean mu(x_i) and variance
// tau2 + A(r), so the conditional risk of a matched set S is
// (mean_S mu - mu(x))^2 + (tau2 + A(r)) / |S|.
double brute_force_eps(const TreeModelSpec& spec, int n, int r) {
  const int M = spec.M;
  const int cells = n * r;
  long long tables = 1, targets = 1;
  for (int i = 0; i < cells; ++i) tables *= M;
  for (int i = 0; i < r; ++i) targets *= M;
  const double noise = spec.tau2 + spec.profile(r);

  std::vector<int> X(cells), x(r);
  double total = 0.0;
  for (long long t = 0; t < tables; ++t) {
    long long code = t;
    for (int c = 0; c < cells; ++c) {
      X[c] = 1 + static_cast<int>(code % M);
      code /= M;
    }
    std::vector<double> mu(n);
    for (int i = 0; i < n; ++i) mu[i] = spec.conditional_mean(std::span<const int>(X.data() + i * r, r));
    for (long long g = 0; g < targets; ++g) {
      long long gc = g;
      for (int k = 0; k < r; ++k) {
        x[k] = 1 + static_cast<int>(gc % M);
        gc /= M;
      }
      int best = 0;
      for (int i = 0; i < n; ++i) {
        int d = 0;
        while (d < r && X[i * r + d] == x[d]) ++d;
        best = std::max(best, d);
      }
      double sum = 0.0;
      int count = 0;
      for (int i = 0; i < n; ++i) {
        int d = 0;
        while (d < best && X[i * r + d] == x[d]) ++d;
        if (d == best) {
          sum += mu[i];
          ++count;
        }
      }
      const double bias = sum / count - spec.conditional_mean(x);
      total += bias * bias + noise / count;
    }
  }
  return total / static_cast<double>(tables * targets);
}

double binom_pmf(int n, int z, double p) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(z + 1.0) - std::lgamma(n - z + 1.0)) * std::pow(p, z) *
         std::pow(1 - p, n - z);
}

// Distribution of Z_k obtained by thinning Z_0 = n step by step.
std::vector<std::vector<double>> thinning_chain(int n, int M, int K) {
  std::vector<std::vector<double>> dist(K + 1, std::vector<double>(n + 1, 0.0));
  dist[0][n] = 1.0;
  for (int k = 0; k < K; ++k)
    for (int from = 0; from <= n; ++from)
      for (int to = 0; to <= from; ++to) dist[k + 1][to] += dist[k][from] * binom_pmf(from, to, 1.0 / M);
  return dist;
}

const TreeModelSpec kPolySpec{2, BiasProfile::polynomial(1.0), 0.0, 0.0};

}  // namespace

TEST_CASE("exact eps equals exhaustive enumeration") {
  const std::vector<TreeModelSpec> specs{
      kPolySpec,
      {2, BiasProfile::exponential(1.0), 0.5, 0.3},
      {2, BiasProfile::hard_threshold(1), 0.0, 0.0},
      {2, BiasProfile::logarithmic(1.0), 0.2, 0.0},
      {3, BiasProfile::polynomial(1.0), 0.0, 0.0},
      {3, BiasProfile::exponential(0.5), 0.4, 0.0},
  };
  for (const auto& spec : specs) {
    const int n_max = spec.M == 2 ? 4 : 3;
    for (int n = 1; n <= n_max; ++n)
      for (int r = 0; r <= 2; ++r) {
        INFO(spec.profile.describe() << " M=" << spec.M << " n=" << n << " r=" << r);
        CHECK(std::abs(exact_eps(spec, n, r) - brute_force_eps(spec, n, r)) < 1e-12);
      }
  }
  CHECK(exact_eps(kPolySpec, 1, 1) == Approx(1.5).epsilon(1e-14));
  CHECK(exact_eps(kPolySpec, 3, 1) == Approx(0.57291666666666667).epsilon(1e-14));
}

TEST_CASE("three-term form: joint pmf identity") {
  for (int M : {2, 3})
    for (int n : {1, 3, 7, 12}) {
      const int K = 6;
      const auto dist = thinning_chain(n, M, K);
      const double q = 1.0 - 1.0 / M;
      const TreeModelSpec spec{M, BiasProfile::exponential(0.7), 0.3, 0.0};
      const auto sums = depth_sums(n, M, K);
      for (int r = 0; r <= K; ++r) {
        double expect = 0.0;
        for (int k = 0; k < r; ++k)
          for (int z = 1; z <= n; ++z) expect += dist[k][z] * std::pow(q, z) * (spec.profile(k) + spec.tau2) / z;
        for (int z = 1; z <= n; ++z) expect += dist[r][z] * (spec.profile(r) + spec.tau2) / z;
        const auto t = nominal_terms(spec, sums, r);
        CHECK(std::abs(t.matched_variance + t.fallback_variance - expect) < 1e-10);
      }
    }
}

TEST_CASE("matched depth inverse count is nondecreasing in r") {
  for (int M : {2, 3})
    for (int n : {1, 5, 40, 300}) {
      const auto s = depth_sums(n, M, 25);
      double prev = 0.0;
      for (int r = 0; r <= 25; ++r) {
        double v = s.matched_inverse[r];
        for (int k = 0; k < r; ++k) v += s.fallback_inverse[k];
        CHECK(v >= prev - 1e-15);
        prev = v;
      }
    }
}

TEST_CASE("nominal form is below the exact error") {
  for (int n : {2, 10, 50})
    for (int r = 0; r <= 8; ++r) CHECK(nominal_eps(kPolySpec, n, r) <= exact_eps(kPolySpec, n, r) + 1e-15);
  CHECK(nominal_eps(kPolySpec, 1, 1) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("mean inverse closed form") {
  CHECK(lemma_a1_mean_inv(4, 2, 1) == Approx(0.3875).epsilon(1e-14));
  CHECK(lemma_a1_mean_inv(9, 3, 0) == Approx(0.1).epsilon(1e-15));
  for (int n = 1; n <= 50; ++n)
    for (int k = 0; k <= 10; ++k) {
      const double p = std::pow(2.0, -k);
      double direct = 0.0;
      for (int z = 0; z <= n; ++z) direct += binom_pmf(n, z, p) / (z + 1.0);
      CHECK(std::abs(lemma_a1_mean_inv(n, 2, k) - direct) < 1e-12);
    }
}

TEST_CASE("upper bound") {
  const TreeModelSpec hard{2, BiasProfile::hard_threshold(2), 0.0, 0.0};
  CHECK(eps_upper_bound(hard, 100, 5) == Approx(0.12).epsilon(1e-14));
  const TreeModelSpec flat{3, BiasProfile::hard_threshold(1), 0.0, 0.0};
  for (int r = 0; r < 6; ++r) CHECK(eps_upper_bound(flat, 40, r) == Approx(6.0 / 40).epsilon(1e-14));

  SECTION("r/n scaling when xi = log M") {
    const TreeModelSpec spec{2, BiasProfile::exponential(std::log(2.0)), 0.0, 0.0};
    for (int n : {100, 1000, 10000, 100000})
      CHECK(eps_upper_bound(spec, n, 10) * n / 10 == Approx(4.0 * 11 / 10).epsilon(1e-12));
  }
  SECTION("dominates the exact error") {
    for (const auto& profile : {BiasProfile::exponential(1.0), BiasProfile::polynomial(1.0),
                                BiasProfile::logarithmic(1.0), BiasProfile::hard_threshold(2)})
      for (int M : {2, 3})
        for (int n = 1; n <= 120; n += 7) {
          const TreeModelSpec spec{M, profile, 0.0, 0.0};
          const auto sums = depth_sums(n, M, 15);
          for (int r = 0; r <= 15; ++r) CHECK(exact_eps(spec, sums, r) <= eps_upper_bound(spec, n, r));
        }
  }
  SECTION("warns for positive tau2") {
    static std::vector<std::string> seen;
    seen.clear();
    set_warning_sink([](const std::string& m) { seen.push_back(m); });
    eps_upper_bound({2, BiasProfile::polynomial(1.0), 0.5, 0.0}, 10, 2);
    set_warning_sink(nullptr);
    REQUIRE(seen.size() == 1);
    CHECK(seen[0].find("tau2") != std::string::npos);
  }
}

TEST_CASE("hard threshold decay") {
  for (int M : {2, 3})
    for (int r0 : {1, 2, 3})
      for (int n = 5; n <= 60; ++n) {
        const TreeModelSpec spec{M, BiasProfile::hard_threshold(r0), 0.0, 0.0};
        const double base = std::pow(1.0 - std::pow(M, -r0), n);
        const auto sums = depth_sums(n, M, r0 + 3);
        for (int r = r0; r <= r0 + 3; ++r) {
          const double exact = exact_eps(spec, sums, r) / base;
          CHECK(exact >= spec.profile(r0 - 1) - 1e-12);
          CHECK(exact <= 2.0 * M / (M - 1.0) * spec.profile(0) + 1e-12);
          const double nominal = nominal_terms(spec, sums, r).total() / base;
          CHECK(nominal >= spec.profile(r0 - 1) - 1e-12);
          CHECK(nominal <= 2.0 * spec.profile(0) + 1e-12);
        }
      }
  // A single binary split: every unmatched target draws from the other cell.
  const TreeModelSpec one{2, BiasProfile::hard_threshold(1), 0.0, 0.0};
  for (int n : {5, 20, 60}) CHECK(exact_eps(one, n, 1) / std::pow(0.5, n) == Approx(4.0).epsilon(1e-10));
}

TEST_CASE("thinning limit") {
  for (int M : {2, 3})
    for (int r = 1; r <= 30; ++r) {
      CHECK(thinning_b(M, r) < std::exp(-1.0));
      if (r > 1) CHECK(thinning_b(M, r) > thinning_b(M, r - 1));
    }
  for (int n = 1; n <= 2000; n += 13)
    for (double p = 0.0; p <= 1.0; p += 0.01) CHECK(n * p * std::pow(1 - p, n) <= 1.0);
}

TEST_CASE("sampling") {
  SECTION("single informative binary covariate") {
    const TreeModelSpec spec{2, BiasProfile::hard_threshold(1), 0.0, 0.4};
    const auto T = sample_training(spec, 200, 3, 9);
    const double b1 = spec.coefficient(1);
    for (int i = 0; i < T.n(); ++i) {
      const double expect = T.row(i)[0] == 1 ? 0.4 + b1 / 2 : 0.4 - b1 / 2;
      CHECK(T.responses()[i] == Approx(expect).epsilon(1e-14));
    }
  }
  SECTION("pooled variance") {
    const TreeModelSpec spec{3, BiasProfile::exponential(1.0), 0.5, 0.0};
    std::vector<double> y;
    for (int s = 0; s < 2000; ++s) {
      const auto T = sample_training(spec, 50, 4, s);
      y.insert(y.end(), T.responses().begin(), T.responses().end());
    }
    double m = 0, v = 0, m4 = 0;
    for (double x : y) m += x;
    m /= y.size();
    for (double x : y) v += (x - m) * (x - m);
    v /= y.size() - 1;
    for (double x : y) m4 += std::pow(x - m, 4);
    m4 /= y.size();
    CHECK(std::abs(v - 1.5) < 3 * std::sqrt((m4 - v * v) / y.size()));
  }
  SECTION("determinism and ranges") {
    const auto a = sample_training(kPolySpec, 30, 5, 4);
    const auto b = sample_training(kPolySpec, 30, 5, 4);
    CHECK(a.responses() == b.responses());
    for (int i = 0; i < a.n(); ++i) {
      CHECK(std::equal(a.row(i).begin(), a.row(i).end(), b.row(i).begin()));
      for (int v : a.row(i)) CHECK((v >= 1 && v <= 2));
    }
  }
  CHECK_THROWS_AS(sample_training(kPolySpec, 5, 0, 1), ConfigError);
  CHECK_THROWS_AS(sample_training({1, BiasProfile::polynomial(1.0), 0.0, 0.0}, 5, 2, 1), ConfigError);
}

TEST_CASE("highest-resolution imputation") {
  const CategoricalTrainingSet T(2, 2, {1, 2, 1, 2, 2, 1, 2, 2}, {1.0, 3.0, 10.0, 20.0});
  const std::vector<int> target{1, 1};
  CHECK(predict_impute(T, 0, target) == Approx(8.5));
  CHECK(predict_impute(T, 2, target) == Approx(2.0));
  CHECK(T.deepest_match(target, 2).depth == 1);
  CHECK(T.deepest_match(target, 2).count == 2);
  const std::vector<int> unique{2, 2};
  CHECK(predict_impute(T, 2, unique) == 20.0);
  CHECK(T.count_matching(unique, 1) == 2);

  const CategoricalTrainingSet empty(2, 2, {}, {});
  CHECK_THROWS_AS(predict_impute(empty, 1, target), DomainError);
  CHECK_THROWS_AS(predict_impute(T, 3, target), DomainError);
  CHECK_THROWS_AS(CategoricalTrainingSet(2, 1, {3}, {1.0}), ConfigError);
}

TEST_CASE("prefix index agrees with a linear scan") {
  std::mt19937_64 g(3);
  for (int trial = 0; trial < 40; ++trial) {
    const int M = 2 + static_cast<int>(g() % 3);
    const auto T = sample_training({M, BiasProfile::polynomial(1.0), 0.3, 0.0}, 1 + static_cast<int>(g() % 60), 6,
                                   trial);
    std::vector<int> x(6);
    for (int rep = 0; rep < 20; ++rep) {
      for (int& v : x) v = 1 + static_cast<int>(g() % M);
      const int r = static_cast<int>(g() % 7);
      int best = 0;
      for (int i = 0; i < T.n(); ++i) {
        int d = 0;
        while (d < r && T.row(i)[d] == x[d]) ++d;
        best = std::max(best, d);
      }
      double sum = 0;
      int count = 0;
      for (int i = 0; i < T.n(); ++i) {
        int d = 0;
        while (d < best && T.row(i)[d] == x[d]) ++d;
        if (d == best) {
          sum += T.responses()[i];
          ++count;
        }
      }
      const auto m = T.deepest_match(x, r);
      CHECK(m.depth == best);
      CHECK(m.count == count);
      CHECK(m.mean == Approx(sum / count).epsilon(1e-12));
      CHECK(T.count_matching(x, best) == count);
    }
  }
}

TEST_CASE("shared training set across threads") {
  const auto T = sample_training(kPolySpec, 500, 8, 12);
  std::vector<double> serial(64), threaded(64);
  auto query = [&](int i) {
    std::vector<int> x(8);
    for (int k = 0; k < 8; ++k) x[k] = 1 + ((i >> (k % 6)) & 1);
    return predict_impute(T, 1 + i % 8, x);
  };
  const auto copy = T;  // fresh, unindexed
  parallel_for(64, 4, [&](int i) {
    std::vector<int> x(8);
    for (int k = 0; k < 8; ++k) x[k] = 1 + ((i >> (k % 6)) & 1);
    threaded[i] = predict_impute(copy, 1 + i % 8, x);
  });
  for (int i = 0; i < 64; ++i) serial[i] = query(i);
  CHECK(serial == threaded);
}

TEST_CASE("Monte Carlo agrees with the exact error") {
  const TreeModelSpec spec{2, BiasProfile::polynomial(1.0), 0.2, 0.0};
  const auto mc = mc_eps(spec, 10, 2, 200000, 77, 2);
  INFO("mc " << mc.mean << " +- " << mc.std_error << " exact " << exact_eps(spec, 10, 2));
  CHECK(std::abs(mc.mean - exact_eps(spec, 10, 2)) < 4 * mc.std_error);

  const auto again = mc_eps(spec, 10, 2, 2000, 5, 1);
  CHECK(again.mean == mc_eps(spec, 10, 2, 2000, 5, 3).mean);

  // Matched targets contribute nothing in a noiseless single-split world.
  const TreeModelSpec one{2, BiasProfile::hard_threshold(1), 0.0, 0.0};
  const auto zero = mc_eps(one, 40, 2, 300, 1);
  CHECK(zero.mean < 1e-6);
}

TEST_CASE("csv round trip") {
  const auto T = sample_training({3, BiasProfile::polynomial(1.0), 0.2, 0.0}, 12, 3, 1);
  std::stringstream ss;
  write_csv(T, ss);
  CHECK(ss.str().rfind("y,x1,x2,x3\n", 0) == 0);
  const auto back = read_csv(ss, 3);
  CHECK(back.responses() == T.responses());
  for (int i = 0; i < T.n(); ++i) CHECK(std::equal(T.row(i).begin(), T.row(i).end(), back.row(i).begin()));
  std::stringstream bad("y,x1\n1.0,4\n");
  CHECK_THROWS_AS(read_csv(bad, 3), ConfigError);
}
