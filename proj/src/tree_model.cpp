#include "mrpred/tree_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "mrpred/binomial.hpp"
#include "mrpred/errors.hpp"
#include "mrpred/parallel.hpp"
#include "mrpred/rng.hpp"

namespace mrpred::tree {

void TreeModelSpec::validate() const {
  if (M < 2) throw ConfigError("tree model: M must be >= 2");
  if (!std::isfinite(tau2) || tau2 < 0.0) throw ConfigError("tau2 must be finite and >= 0");
  if (!std::isfinite(beta0)) throw ConfigError("beta0 must be finite");
}

double TreeModelSpec::coefficient(int k) const {
  const double d = profile.increment(k);
  return M / std::sqrt(M - 1.0) * std::sqrt(d);
}

double TreeModelSpec::conditional_mean(std::span<const int> prefix) const {
  double mu = beta0;
  for (std::size_t j = 0; j < prefix.size(); ++j) {
    const int k = static_cast<int>(j) + 1;
    mu += coefficient(k) * ((prefix[j] == 1 ? 1.0 : 0.0) - 1.0 / M);
  }
  return mu;
}

// ---------------------------------------------------------------------------
// Training set and prefix index

struct CategoricalTrainingSet::Index {
  std::once_flag built;
  std::vector<int> order;           // units sorted lexicographically by row
  std::vector<double> partial_sum;  // partial_sum[i] = sum of responses of order[0..i)
};

CategoricalTrainingSet::CategoricalTrainingSet(int M, int r_max, std::vector<int> covariates,
                                               std::vector<double> responses, std::uint64_t seed)
    : M_(M),
      r_max_(r_max),
      covariates_(std::move(covariates)),
      responses_(std::move(responses)),
      seed_(seed),
      index_(std::make_unique<Index>()) {
  if (M_ < 2) throw ConfigError("categorical training set: M must be >= 2");
  if (r_max_ < 0) throw ConfigError("categorical training set: r_max must be >= 0");
  if (covariates_.size() != responses_.size() * static_cast<std::size_t>(r_max_))
    throw ConfigError("categorical training set: covariate matrix has wrong size");
  for (int v : covariates_)
    if (v < 1 || v > M_) throw ConfigError("categorical training set: covariate outside 1..M");
}

CategoricalTrainingSet::CategoricalTrainingSet(const CategoricalTrainingSet& other)
    : M_(other.M_),
      r_max_(other.r_max_),
      covariates_(other.covariates_),
      responses_(other.responses_),
      seed_(other.seed_),
      index_(std::make_unique<Index>()) {}

CategoricalTrainingSet& CategoricalTrainingSet::operator=(const CategoricalTrainingSet& other) {
  if (this != &other) *this = CategoricalTrainingSet(other);
  return *this;
}

CategoricalTrainingSet::CategoricalTrainingSet(CategoricalTrainingSet&&) noexcept = default;
CategoricalTrainingSet& CategoricalTrainingSet::operator=(CategoricalTrainingSet&&) noexcept = default;
CategoricalTrainingSet::~CategoricalTrainingSet() = default;

std::span<const int> CategoricalTrainingSet::row(int i) const {
  return {covariates_.data() + static_cast<std::size_t>(i) * r_max_, static_cast<std::size_t>(r_max_)};
}

const CategoricalTrainingSet::Index& CategoricalTrainingSet::index() const {
  std::call_once(index_->built, [this] {
    auto& idx = *index_;
    idx.order.resize(responses_.size());
    std::iota(idx.order.begin(), idx.order.end(), 0);
    std::stable_sort(idx.order.begin(), idx.order.end(), [this](int a, int b) {
      const auto ra = row(a);
      const auto rb = row(b);
      return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
    idx.partial_sum.assign(idx.order.size() + 1, 0.0);
    for (std::size_t i = 0; i < idx.order.size(); ++i)
      idx.partial_sum[i + 1] = idx.partial_sum[i] + responses_[idx.order[i]];
  });
  return *index_;
}

namespace {

// Lexicographic comparison of the first `depth` entries.
bool prefix_less(std::span<const int> a, std::span<const int> b, int depth) {
  return std::lexicographical_compare(a.begin(), a.begin() + depth, b.begin(), b.begin() + depth);
}

int common_prefix(std::span<const int> a, std::span<const int> b, int depth) {
  int k = 0;
  while (k < depth && a[k] == b[k]) ++k;
  return k;
}

}  // namespace

int CategoricalTrainingSet::count_matching(std::span<const int> prefix, int depth) const {
  if (depth < 0 || depth > r_max_ || static_cast<int>(prefix.size()) < depth)
    throw DomainError("count_matching: depth outside [0, min(r_max, prefix length)]");
  const auto& idx = index();
  auto lo = std::lower_bound(idx.order.begin(), idx.order.end(), prefix,
                             [&](int unit, std::span<const int> x) { return prefix_less(row(unit), x, depth); });
  auto hi = std::upper_bound(lo, idx.order.end(), prefix,
                             [&](std::span<const int> x, int unit) { return prefix_less(x, row(unit), depth); });
  return static_cast<int>(hi - lo);
}

CategoricalTrainingSet::Match CategoricalTrainingSet::deepest_match(std::span<const int> x_prefix, int r) const {
  if (responses_.empty()) throw DomainError("predict_impute: empty training set");
  if (r < 0 || r > r_max_) throw DomainError("predict_impute: r outside [0, r_max]");
  if (static_cast<int>(x_prefix.size()) < r) throw DomainError("predict_impute: prefix shorter than r");

  const auto& idx = index();
  auto pos = std::lower_bound(idx.order.begin(), idx.order.end(), x_prefix,
                              [&](int unit, std::span<const int> x) { return prefix_less(row(unit), x, r); });
  int depth = 0;
  if (pos != idx.order.end()) depth = std::max(depth, common_prefix(row(*pos), x_prefix, r));
  if (pos != idx.order.begin()) depth = std::max(depth, common_prefix(row(*(pos - 1)), x_prefix, r));

  auto lo = std::lower_bound(idx.order.begin(), idx.order.end(), x_prefix,
                             [&](int unit, std::span<const int> x) { return prefix_less(row(unit), x, depth); });
  auto hi = std::upper_bound(lo, idx.order.end(), x_prefix,
                             [&](std::span<const int> x, int unit) { return prefix_less(x, row(unit), depth); });
  const auto a = static_cast<std::size_t>(lo - idx.order.begin());
  const auto b = static_cast<std::size_t>(hi - idx.order.begin());

  Match m;
  m.depth = depth;
  m.count = static_cast<int>(b - a);
  m.mean = (idx.partial_sum[b] - idx.partial_sum[a]) / m.count;
  return m;
}

CategoricalTrainingSet sample_training(const TreeModelSpec& spec, int n, int r_max, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw ConfigError("sample_training: n must be >= 1");
  if (r_max < 1) throw ConfigError("sample_training: r_max must be >= 1");

  std::vector<double> beta(r_max + 1, 0.0);
  for (int k = 1; k <= r_max; ++k) beta[k] = spec.coefficient(k);
  const double tail_beta = spec.M / std::sqrt(spec.M - 1.0) * std::sqrt(spec.profile(r_max));
  const double noise_sd = std::sqrt(spec.tau2);
  const double centre = 1.0 / spec.M;

  Engine engine = make_engine(seed);
  std::uniform_int_distribution<int> category(1, spec.M);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<int> covariates(static_cast<std::size_t>(n) * r_max);
  std::vector<double> responses(n);
  for (int i = 0; i < n; ++i) {
    double y = spec.beta0;
    for (int k = 1; k <= r_max; ++k) {
      const int x = category(engine);
      covariates[static_cast<std::size_t>(i) * r_max + (k - 1)] = x;
      y += beta[k] * ((x == 1 ? 1.0 : 0.0) - centre);
    }
    const int hidden = category(engine);
    y += tail_beta * ((hidden == 1 ? 1.0 : 0.0) - centre);
    y += noise_sd * normal(engine);
    responses[i] = y;
  }
  return CategoricalTrainingSet(spec.M, r_max, std::move(covariates), std::move(responses), seed);
}

double predict_impute(const CategoricalTrainingSet& T, int r, std::span<const int> x_prefix) {
  return T.deepest_match(x_prefix, r).mean;
}

// ---------------------------------------------------------------------------
// Exact expectations

DepthSums depth_sums(int n, int M, int max_depth) {
  if (n < 1) throw DomainError("depth_sums: n must be >= 1");
  if (M < 2) throw ConfigError("depth_sums: M must be >= 2");
  if (max_depth < 0) throw DomainError("depth_sums: depth must be >= 0");

  DepthSums s;
  s.n = n;
  s.M = M;
  s.matched_inverse.resize(max_depth + 1);
  s.fallback_inverse.resize(max_depth + 1);
  s.fallback_mass.resize(max_depth + 1);

  const double log_m = std::log(static_cast<double>(M));
  const double log_q = std::log1p(-1.0 / M);
  for (int k = 0; k <= max_depth; ++k) {
    const double log_p = -k * log_m;
    const auto window = binomial_window(n, log_p);
    CompensatedSum matched, fallback_inv, fallback;
    for (std::int64_t z = window.lo; z <= window.hi; ++z) {
      const double lp = binomial_log_pmf(n, z, log_p);
      const double zd = static_cast<double>(z);
      matched.add(std::exp(lp - std::log(zd)));
      fallback_inv.add(std::exp(lp + zd * log_q - std::log(zd)));
      fallback.add(std::exp(lp + zd * log_q));
    }
    s.matched_inverse[k] = matched.value();
    s.fallback_inverse[k] = fallback_inv.value();
    s.fallback_mass[k] = fallback.value();
  }
  return s;
}

double exact_eps(const TreeModelSpec& spec, const DepthSums& sums, int r) {
  spec.validate();
  if (r < 0 || r > sums.max_depth()) throw DomainError("tree exact_eps: r outside the precomputed depths");
  if (sums.M != spec.M) throw ConfigError("tree exact_eps: depth sums computed for a different M");

  const double M = spec.M;
  const double bias_gain = (M / (M - 1.0)) * (M / (M - 1.0));
  const double variance_gain = M * (M - 2.0) / ((M - 1.0) * (M - 1.0));
  const double a_r = spec.profile(r);

  CompensatedSum total;
  total.add((a_r + spec.tau2) * sums.matched_inverse[r]);
  for (int k = 0; k < r; ++k) {
    const double a_next = spec.profile(k + 1);
    const double d = spec.profile.increment(k + 1);
    total.add((spec.tau2 + a_next + variance_gain * d) * sums.fallback_inverse[k]);
    total.add((a_next - a_r + bias_gain * d) * sums.fallback_mass[k]);
  }
  return total.value();
}

double exact_eps(const TreeModelSpec& spec, int n, int r) {
  if (r < 0) throw DomainError("tree exact_eps: r must be >= 0");
  return exact_eps(spec, depth_sums(n, spec.M, r), r);
}

ThreeTerms nominal_terms(const TreeModelSpec& spec, const DepthSums& sums, int r) {
  spec.validate();
  if (r < 0 || r > sums.max_depth()) throw DomainError("nominal_terms: r outside the precomputed depths");
  const double a_r = spec.profile(r);
  ThreeTerms t;
  t.matched_variance = (a_r + spec.tau2) * sums.matched_inverse[r];
  CompensatedSum variance, bias;
  for (int k = 0; k < r; ++k) {
    const double a_k = spec.profile(k);
    variance.add((a_k + spec.tau2) * sums.fallback_inverse[k]);
    bias.add((a_k - a_r) * sums.fallback_mass[k]);
  }
  t.fallback_variance = variance.value();
  t.fallback_bias = bias.value();
  return t;
}

double nominal_eps(const TreeModelSpec& spec, int n, int r) {
  if (r < 0) throw DomainError("nominal_eps: r must be >= 0");
  return nominal_terms(spec, depth_sums(n, spec.M, r), r).total();
}

double lemma_a1_mean_inv(int n, int M, int k) {
  if (n < 1 || M < 2 || k < 0) throw DomainError("lemma_a1_mean_inv: need n >= 1, M >= 2, k >= 0");
  if (k == 0) return 1.0 / (n + 1.0);
  const double log_mk = k * std::log(static_cast<double>(M));
  const double miss = -std::expm1((n + 1.0) * std::log1p(-std::exp(-log_mk)));
  return std::exp(log_mk - std::log(n + 1.0)) * miss;
}

double eps_upper_bound(const TreeModelSpec& spec, int n, int r) {
  spec.validate();
  if (n < 1 || r < 0) throw DomainError("eps_upper_bound: need n >= 1 and r >= 0");
  if (spec.tau2 > 0.0) warn("eps_upper_bound is derived for tau2 = 0; tau2 = " + std::to_string(spec.tau2));
  const double log_m = std::log(static_cast<double>(spec.M));
  CompensatedSum sum;
  for (int k = 0; k <= r; ++k) {
    const double a = spec.profile(k);
    if (a > 0.0) sum.add(std::exp(k * log_m + std::log(a)));
  }
  return 2.0 * spec.M / n * sum.value();
}

double thinning_b(int M, int r) {
  const double mr = std::pow(static_cast<double>(M), r);
  return std::exp(mr * std::log1p(-1.0 / mr));
}

McEstimate mc_eps(const TreeModelSpec& spec, int n, int r, int reps, std::uint64_t seed, int workers) {
  spec.validate();
  if (reps < 1) throw ConfigError("mc_eps: reps must be >= 1");
  if (r < 0) throw DomainError("mc_eps: r must be >= 0");

  std::vector<double> squared(reps);
  parallel_for(reps, workers, [&](int i) {
    const std::uint64_t rep_seed = child_seed(seed, static_cast<std::uint64_t>(i));
    const auto T = sample_training(spec, n, std::max(r, 1), rep_seed);
    Engine target_engine = make_engine(splitmix64(rep_seed));
    std::uniform_int_distribution<int> category(1, spec.M);
    std::vector<int> x(r);
    for (int& v : x) v = category(target_engine);
    const double diff = predict_impute(T, r, x) - spec.conditional_mean(x);
    squared[i] = diff * diff;
  });

  CompensatedSum sum;
  for (double v : squared) sum.add(v);
  McEstimate est;
  est.reps = reps;
  est.mean = sum.value() / reps;
  if (reps > 1) {
    CompensatedSum ss;
    for (double v : squared) ss.add((v - est.mean) * (v - est.mean));
    est.std_error = std::sqrt(ss.value() / (reps - 1.0) / reps);
  }
  return est;
}

void write_csv(const CategoricalTrainingSet& T, std::ostream& os) {
  os << "y";
  for (int k = 1; k <= T.r_max(); ++k) os << ",x" << k;
  os << '\n';
  const auto old_precision = os.precision(17);
  for (int i = 0; i < T.n(); ++i) {
    os << T.responses()[i];
    for (int v : T.row(i)) os << ',' << v;
    os << '\n';
  }
  os.precision(old_precision);
}

CategoricalTrainingSet read_csv(std::istream& is, int M) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("categorical csv: missing header");
  int columns = 0;
  {
    std::istringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
      const std::string expected = columns == 0 ? "y" : "x" + std::to_string(columns);
      if (cell != expected) throw ConfigError("categorical csv: expected column '" + expected + "'");
      ++columns;
    }
  }
  if (columns < 1) throw ConfigError("categorical csv: need a y column");
  const int r_max = columns - 1;

  std::vector<int> covariates;
  std::vector<double> responses;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    int c = 0;
    while (std::getline(cells, cell, ',')) {
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (c == 0) {
        double y = 0.0;
        auto [ptr, ec] = std::from_chars(first, last, y);
        if (ec != std::errc() || ptr != last) throw ConfigError("categorical csv: bad response '" + cell + "'");
        responses.push_back(y);
      } else {
        int x = 0;
        auto [ptr, ec] = std::from_chars(first, last, x);
        if (ec != std::errc() || ptr != last) throw ConfigError("categorical csv: bad covariate '" + cell + "'");
        covariates.push_back(x);
      }
      ++c;
    }
    if (c != columns) throw ConfigError("categorical csv: ragged row");
  }
  return CategoricalTrainingSet(M, r_max, std::move(covariates), std::move(responses));
}

}  // namespace mrpred::tree
