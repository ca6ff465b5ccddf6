#include "mrpred/resolution_select.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "mrpred/errors.hpp"
#include "mrpred/parallel.hpp"
#include "mrpred/tree_model.hpp"

namespace mrpred {

std::string to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::ExactPE: return "exact_pe";
    case CurveKind::CV: return "cv";
    case CurveKind::UE: return "ue";
    case CurveKind::IC: return "ic";
    case CurveKind::SigmaHat2: return "sigma_hat2";
    case CurveKind::EstimationError: return "estimation_error";
    case CurveKind::EpsExact: return "eps_exact";
    case CurveKind::EpsUpper: return "eps_upper";
  }
  return "unknown";
}

double ErrorCurve::at(int r) const {
  if (!contains(r))
    throw DomainError(to_string(kind) + " curve: r=" + std::to_string(r) + " outside [" + std::to_string(first_r) +
                      ", " + std::to_string(last_r()) + "]");
  return values[r - first_r];
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::Oracle: return "Oracle";
    case Method::CV: return "CV";
    case Method::UE: return "UE";
    case Method::IC: return "IC";
  }
  return "unknown";
}

Method parse_method(const std::string& tag) {
  const auto t = lower(tag);
  if (t == "oracle") return Method::Oracle;
  if (t == "cv") return Method::CV;
  if (t == "ue") return Method::UE;
  if (t == "ic") return Method::IC;
  throw ConfigError("unknown method '" + tag + "' (expected oracle, cv, ue or ic)");
}

int argmin_resolution(const ErrorCurve& curve, SearchRange range) {
  if (range.lo > range.hi) throw DomainError("argmin: empty search range");
  if (!curve.contains(range.lo) || !curve.contains(range.hi))
    throw DomainError("argmin: search range not covered by the curve");
  int best = range.lo;
  double best_value = curve.at(range.lo);
  for (int r = range.lo + 1; r <= range.hi; ++r) {
    const double v = curve.at(r);
    if (v < best_value) {
      best = r;
      best_value = v;
    }
  }
  return best;
}

int argmin_resolution(const ErrorCurve& curve) {
  if (curve.values.empty()) throw DomainError("argmin: empty curve");
  return argmin_resolution(curve, {curve.first_r, curve.last_r()});
}

std::vector<int> local_minima(const ErrorCurve& curve) {
  std::vector<int> out;
  const int size = static_cast<int>(curve.values.size());
  if (size < 2) return out;
  for (int i = 0; i < size; ++i) {
    const double v = curve.values[i];
    const bool left = i == 0 || curve.values[i - 1] > v;
    const bool right = i == size - 1 || curve.values[i + 1] > v;
    if (left && right) out.push_back(curve.first_r + i);
  }
  return out;
}

ErrorCurve exact_pe_curve(const linear::LinearModelSpec& spec, int n, SearchRange range) {
  if (range.lo < 0 || range.lo > range.hi) throw DomainError("exact_pe_curve: empty or negative range");
  ErrorCurve c;
  c.kind = CurveKind::ExactPE;
  c.first_r = range.lo;
  c.n = n;
  c.values.reserve(range.hi - range.lo + 1);
  for (int r = range.lo; r <= range.hi; ++r) c.values.push_back(linear::exact_pe(spec, n, r));
  return c;
}

int max_search_resolution(Method m, int n) {
  switch (m) {
    case Method::Oracle:
    case Method::UE: return n - 3;
    case Method::CV: return n - 2;
    case Method::IC: return n - 1;
  }
  return n - 3;
}

SelectionReport select(Method m, const linear::NestedLeastSquares& fits, const linear::LinearModelSpec& spec,
                       SearchRange range) {
  const int n = fits.n();
  if (range.lo < 0 || range.lo > range.hi) throw DomainError("select: empty search range");
  if (range.hi > max_search_resolution(m, n))
    throw DomainError("select: " + to_string(m) + " search range must end at or below " +
                      std::to_string(max_search_resolution(m, n)) + " for n=" + std::to_string(n));
  if (m != Method::Oracle && range.hi > fits.r_hi())
    throw DomainError("select: search range exceeds the fitted resolutions");

  SelectionReport rep;
  rep.method = m;
  rep.search_range = range;
  if (m == Method::Oracle) {
    rep.curve = exact_pe_curve(spec, n, range);
  } else {
    rep.curve.first_r = range.lo;
    rep.curve.n = n;
    rep.curve.values.reserve(range.hi - range.lo + 1);
    for (int r = range.lo; r <= range.hi; ++r) {
      switch (m) {
        case Method::CV:
          rep.curve.kind = CurveKind::CV;
          rep.curve.values.push_back(fits.cv(r));
          break;
        case Method::UE:
          rep.curve.kind = CurveKind::UE;
          rep.curve.values.push_back(fits.ue(r));
          break;
        default:
          rep.curve.kind = CurveKind::IC;
          rep.curve.values.push_back(fits.ic(r));
          break;
      }
    }
  }
  rep.chosen_r = argmin_resolution(rep.curve, range);
  return rep;
}

SelectionReport select(Method m, const linear::TrainingSet& T, const linear::LinearModelSpec& spec,
                       SearchRange range) {
  if (m == Method::Oracle) {
    if (range.lo < 0 || range.lo > range.hi) throw DomainError("select: empty search range");
    if (range.hi > T.n - 3) throw DomainError("select: Oracle search range must end at or below n-3");
    SelectionReport rep;
    rep.method = m;
    rep.search_range = range;
    rep.curve = exact_pe_curve(spec, T.n, range);
    rep.chosen_r = argmin_resolution(rep.curve, range);
    return rep;
  }
  return select(m, linear::NestedLeastSquares(T, range.hi), spec, range);
}

// ---------------------------------------------------------------------------
// Rate probes

void ErrorModel::validate() const {
  switch (kind) {
    case Kind::Polynomial:
      if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("poly error model: alpha must be > 0");
      break;
    case Kind::Exponential:
      if (!(alpha > 1.0) || !std::isfinite(alpha)) throw ConfigError("expo error model: alpha must be > 1");
      break;
    case Kind::LinearExact:
    case Kind::TreeExact:
      if (!(tau2 >= 0.0) || !std::isfinite(tau2)) throw ConfigError("error model: tau2 must be finite and >= 0");
      break;
    default: break;
  }
  if ((kind == Kind::TreeExact || kind == Kind::TreeUpper) && M < 2)
    throw ConfigError("tree error model: M must be >= 2");
}

std::string to_string(ErrorModel::Kind kind) {
  switch (kind) {
    case ErrorModel::Kind::Polynomial: return "poly";
    case ErrorModel::Kind::Exponential: return "expo";
    case ErrorModel::Kind::LinearExact: return "linear-exact";
    case ErrorModel::Kind::LinearZero: return "linear-zero";
    case ErrorModel::Kind::TreeExact: return "tree-exact";
    case ErrorModel::Kind::TreeUpper: return "tree-upper";
  }
  return "unknown";
}

ErrorModel::Kind parse_error_model(const std::string& tag) {
  const auto t = lower(tag);
  if (t == "poly" || t == "polynomial") return ErrorModel::Kind::Polynomial;
  if (t == "expo" || t == "exponential") return ErrorModel::Kind::Exponential;
  if (t == "linear-exact") return ErrorModel::Kind::LinearExact;
  if (t == "linear-zero") return ErrorModel::Kind::LinearZero;
  if (t == "tree-exact") return ErrorModel::Kind::TreeExact;
  if (t == "tree-upper") return ErrorModel::Kind::TreeUpper;
  throw ConfigError("unknown error model '" + tag +
                    "' (expected poly, expo, linear-exact, linear-zero, tree-exact or tree-upper)");
}

std::string ErrorModel::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case Kind::Polynomial:
    case Kind::Exponential: os << "(alpha=" << alpha << ")"; break;
    case Kind::LinearExact: os << "(tau2=" << tau2 << ")"; break;
    case Kind::TreeExact: os << "(M=" << M << ",tau2=" << tau2 << ")"; break;
    case Kind::TreeUpper: os << "(M=" << M << ")"; break;
    case Kind::LinearZero: break;
  }
  return os.str();
}

std::string to_string(RateTransform t) {
  switch (t) {
    case RateTransform::LogLossVsLogN: return "logL-vs-logn";
    case RateTransform::RVsLogN: return "R-vs-logn";
    case RateTransform::ROverNVsLogN: return "R/n-vs-logn";
  }
  return "unknown";
}

RateTransform parse_rate_transform(const std::string& tag) {
  const auto t = lower(tag);
  if (t == "logl-vs-logn" || t == "loss") return RateTransform::LogLossVsLogN;
  if (t == "r-vs-logn" || t == "resolution") return RateTransform::RVsLogN;
  if (t == "r/n-vs-logn" || t == "fraction") return RateTransform::ROverNVsLogN;
  throw ConfigError("unknown rate transform '" + tag + "' (expected loss, resolution or fraction)");
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_line: need at least two points");
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

namespace {

constexpr int kMaxCap = 1000000;

bool is_linear(const ErrorModel& m) {
  return m.kind == ErrorModel::Kind::LinearExact || m.kind == ErrorModel::Kind::LinearZero;
}
bool is_tree(const ErrorModel& m) {
  return m.kind == ErrorModel::Kind::TreeExact || m.kind == ErrorModel::Kind::TreeUpper;
}

int domain_max(const ErrorModel& m, int n) { return is_linear(m) ? n - 3 : kMaxCap; }

// Order of magnitude of R_n used to size the scan.
double predicted_resolution(const BiasProfile& profile, const ErrorModel& model, int n) {
  const double logn = std::log(static_cast<double>(n));
  const double nd = n;
  const auto& kind = profile.kind();
  const auto* hard = std::get_if<HardThreshold>(&kind);
  const auto* expo = std::get_if<Exponential>(&kind);
  const auto* poly = std::get_if<Polynomial>(&kind);
  if (hard) return hard->r0;
  switch (model.kind) {
    case ErrorModel::Kind::Polynomial:
      if (expo) return logn / expo->xi;
      if (poly) return std::pow(nd, 1.0 / (poly->xi + model.alpha));
      return std::pow(nd, 1.0 / model.alpha);
    case ErrorModel::Kind::Exponential:
      if (expo) return logn / (expo->xi + std::log(model.alpha));
      return logn / std::log(model.alpha);
    case ErrorModel::Kind::LinearExact:
      if (model.tau2 > 0.0) {
        if (expo) return logn / expo->xi;
        if (poly) return std::pow(nd, 1.0 / (poly->xi + 1.0));
      }
      return nd;
    case ErrorModel::Kind::LinearZero: return nd;
    case ErrorModel::Kind::TreeExact:
    case ErrorModel::Kind::TreeUpper: return logn / std::log(static_cast<double>(model.M));
  }
  return nd;
}

// A(r) + eps(r, n) for r = 0..cap.
std::vector<double> loss_curve(const BiasProfile& profile, const ErrorModel& model, int n, int cap) {
  std::vector<double> out(cap + 1);
  if (is_tree(model)) {
    tree::TreeModelSpec spec{model.M, profile, model.kind == ErrorModel::Kind::TreeExact ? model.tau2 : 0.0, 0.0};
    if (model.kind == ErrorModel::Kind::TreeExact) {
      const auto sums = tree::depth_sums(n, model.M, cap);
      for (int r = 0; r <= cap; ++r) out[r] = profile(r) + tree::exact_eps(spec, sums, r);
    } else {
      const double log_m = std::log(static_cast<double>(model.M));
      double sum = 0.0;
      for (int r = 0; r <= cap; ++r) {
        const double a = profile(r);
        if (a > 0.0) sum += std::exp(r * log_m + std::log(a));
        out[r] = a + 2.0 * model.M / n * sum;
      }
    }
    return out;
  }
  for (int r = 0; r <= cap; ++r) out[r] = model_loss(profile, model, n, r);
  return out;
}

RatePoint probe_one(const BiasProfile& profile, const ErrorModel& model, int n) {
  const int dmax = domain_max(model, n);
  if (dmax < 0) throw DomainError("rate_probe: n=" + std::to_string(n) + " too small for " + model.describe());
  const double pred = std::max(1.0, predicted_resolution(profile, model, n));
  int cap = static_cast<int>(std::min<double>({10.0 * std::ceil(pred), kMaxCap, static_cast<double>(dmax)}));
  cap = std::max(cap, std::min(1, dmax));
  for (;;) {
    const auto curve = loss_curve(profile, model, n, cap);
    const auto best = std::min_element(curve.begin(), curve.end()) - curve.begin();
    RatePoint p;
    p.n = n;
    p.R = static_cast<int>(best);
    p.L = curve[best];
    p.r_cap = cap;
    p.interior = p.R < cap || cap == dmax;
    if (p.interior || cap >= kMaxCap) return p;
    cap = static_cast<int>(std::min<long long>({2LL * cap, kMaxCap, dmax}));
  }
}

}  // namespace

double model_loss(const BiasProfile& profile, const ErrorModel& model, int n, int r) {
  if (n < 1 || r < 0) throw DomainError("model_loss: need n >= 1 and r >= 0");
  const double a = profile(r);
  switch (model.kind) {
    case ErrorModel::Kind::Polynomial: return a + std::pow(static_cast<double>(r), model.alpha) / n;
    case ErrorModel::Kind::Exponential: return a + std::exp(r * std::log(model.alpha)) / n;
    case ErrorModel::Kind::LinearExact:
      return a + linear::exact_eps(linear::LinearModelSpec{profile, model.tau2, 0.0}, n, r);
    case ErrorModel::Kind::LinearZero: return a + linear::exact_eps(linear::LinearModelSpec{profile, 0.0, 0.0}, n, r);
    case ErrorModel::Kind::TreeExact:
      return a + tree::exact_eps(tree::TreeModelSpec{model.M, profile, model.tau2, 0.0}, n, r);
    case ErrorModel::Kind::TreeUpper:
      return a + tree::eps_upper_bound(tree::TreeModelSpec{model.M, profile, 0.0, 0.0}, n, r);
  }
  throw ConfigError("model_loss: unknown error model");
}

RateFitReport rate_probe(const BiasProfile& profile, const ErrorModel& model, const std::vector<int>& n_grid,
                         RateTransform transform, int workers) {
  model.validate();
  if (n_grid.size() < 2) throw ConfigError("rate_probe: n grid needs at least two points");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1]) throw ConfigError("rate_probe: n grid must be strictly increasing");
  if (n_grid.front() < 1) throw ConfigError("rate_probe: n must be >= 1");

  RateFitReport rep;
  rep.profile = profile.describe();
  rep.error_model = model.describe();
  rep.transform = transform;
  rep.points.resize(n_grid.size());
  parallel_for(static_cast<int>(n_grid.size()), workers,
               [&](int i) { rep.points[i] = probe_one(profile, model, n_grid[i]); });

  for (const auto& p : rep.points) rep.all_interior = rep.all_interior && p.interior;
  const int size = static_cast<int>(rep.points.size());
  rep.fit_first = std::min(size - 2, static_cast<int>(std::floor(0.2 * size)));
  std::vector<double> x, y;
  for (int i = rep.fit_first; i < size; ++i) {
    const auto& p = rep.points[i];
    x.push_back(std::log(static_cast<double>(p.n)));
    switch (transform) {
      case RateTransform::LogLossVsLogN: y.push_back(std::log(p.L)); break;
      case RateTransform::RVsLogN: y.push_back(p.R); break;
      case RateTransform::ROverNVsLogN: y.push_back(static_cast<double>(p.R) / p.n); break;
    }
  }
  rep.fit = fit_line(x, y);
  return rep;
}

std::vector<int> log10_grid(double lo, double hi, int count) {
  if (count < 2 || !(hi > lo)) throw ConfigError("log10_grid: need count >= 2 and hi > lo");
  std::vector<int> out;
  const double step = (hi - lo) / (count - 1);
  for (int i = 0; i < count; ++i) {
    const int n = static_cast<int>(std::llround(std::pow(10.0, lo + step * i)));
    if (out.empty() || n > out.back()) out.push_back(n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orderings

void PermutationSpec::validate() const {
  switch (kind) {
    case Kind::Identity: break;
    case Kind::ConstantDelay:
      if (param < 0.0 || param != std::floor(param)) throw ConfigError("constant delay: c must be an integer >= 0");
      break;
    case Kind::FractionDelay:
      if (!(param >= 0.0 && param < 1.0)) throw ConfigError("fraction delay: gamma must lie in [0, 1)");
      break;
    case Kind::LogGap:
      if (!(param >= 1.0) || !std::isfinite(param)) throw ConfigError("log gap: a must be >= 1");
      break;
  }
}

std::string PermutationSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Identity: os << "identity"; break;
    case Kind::ConstantDelay: os << "constant_delay(c=" << param << ")"; break;
    case Kind::FractionDelay: os << "fraction_delay(gamma=" << param << ")"; break;
    case Kind::LogGap: os << "log_gap(a=" << param << ")"; break;
  }
  return os.str();
}

int PermutationSpec::required(int j) const {
  switch (kind) {
    case Kind::Identity: return j;
    case Kind::ConstantDelay: return std::max(j - static_cast<int>(param), 0);
    case Kind::FractionDelay: return j - static_cast<int>(std::floor(param * j));
    case Kind::LogGap:
      if (j == 0) return 0;
      return static_cast<int>(std::ceil(std::pow(static_cast<double>(j), 1.0 / param) - 1e-12));
  }
  return j;
}

PermutationSpec::Kind parse_permutation(const std::string& tag) {
  const auto t = lower(tag);
  if (t == "identity") return PermutationSpec::Kind::Identity;
  if (t == "constant_delay" || t == "constant-delay") return PermutationSpec::Kind::ConstantDelay;
  if (t == "fraction_delay" || t == "fraction-delay") return PermutationSpec::Kind::FractionDelay;
  if (t == "log_gap" || t == "log-gap") return PermutationSpec::Kind::LogGap;
  throw ConfigError("unknown permutation '" + tag + "' (expected identity, constant_delay, fraction_delay, log_gap)");
}

std::vector<int> build_ordering(const PermutationSpec& perm, int horizon) {
  perm.validate();
  if (horizon < 0) throw DomainError("build_ordering: horizon must be >= 0");
  std::vector<int> order;
  order.reserve(horizon);
  int placed = 0;
  int filler = horizon;
  for (int j = 1; j <= horizon; ++j) {
    const int need = std::clamp(perm.required(j), 0, j);
    if (placed < need) {
      order.push_back(++placed);
    } else {
      order.push_back(++filler);
    }
  }
  return order;
}

int count_mistakes(const std::vector<int>& order, int r) {
  if (r < 0 || r > static_cast<int>(order.size())) throw DomainError("count_mistakes: r outside the ordering");
  int m = 0;
  for (int j = 0; j < r; ++j)
    if (order[j] > r) ++m;
  return m;
}

namespace {

// A(N) plus the increments of 1..N not flagged in `included`, summed from N
// downwards so that a superset of excluded indices never sums lower.
double tail_sum(const BiasProfile& profile, const std::vector<char>& included, int N) {
  double s = profile(N);
  for (int j = N; j >= 1; --j)
    if (!included[j]) s += profile.increment(j);
  return s;
}

}  // namespace

double permuted_bias(const BiasProfile& profile, const std::vector<int>& order, int r) {
  if (r < 0 || r > static_cast<int>(order.size())) throw DomainError("permuted_bias: r outside the ordering");
  int N = 0;
  for (int j = 0; j < r; ++j) N = std::max(N, order[j]);
  std::vector<char> included(N + 1, 0);
  for (int j = 0; j < r; ++j) included[order[j]] = 1;
  return tail_sum(profile, included, N);
}

OrderingReport ordering_experiment(const BiasProfile& profile, const PermutationSpec& perm,
                                   const std::vector<int>& n_grid, const ErrorModel& model, int workers) {
  perm.validate();
  const auto rates = rate_probe(profile, model, n_grid, RateTransform::LogLossVsLogN, workers);
  int horizon = 1;
  for (const auto& p : rates.points) horizon = std::max(horizon, p.R);
  const auto order = build_ordering(perm, horizon);

  OrderingReport rep;
  rep.profile = profile.describe();
  rep.permutation = perm.describe();
  rep.error_model = model.describe();
  // build_ordering places 1, 2, ... in increasing order and fills the rest
  // from beyond the horizon, so the first r positions hold exactly 1..r-M_r
  // plus fillers. A(r - M_r) is a suffix sum of increments; A'(r) removes
  // the fillers' increments from it, which can only lower it.
  int top = horizon;
  for (int v : order) top = std::max(top, v);
  std::vector<double> suffix(top + 2, 0.0);
  suffix[top + 1] = profile(top);
  for (int j = top; j >= 1; --j) suffix[j] = suffix[j + 1] + profile.increment(j);

  int placed = 0;
  double filler_sum = 0.0;
  for (int r = 0; r <= horizon; ++r) {
    if (r > 0) {
      const int v = order[r - 1];
      if (v > horizon) {
        filler_sum += profile.increment(v);
      } else {
        ++placed;
      }
    }
    OrderingRow row;
    row.r = r;
    row.mistakes = r - placed;
    row.A = profile(r);
    row.A_shifted = suffix[placed + 1];
    row.A_perm = row.A_shifted - filler_sum;
    if (row.A_perm > row.A_shifted) rep.nested_inequality_holds = false;
    rep.rows.push_back(row);
  }
  for (const auto& p : rates.points) {
    OrderingRatePoint q;
    q.n = p.n;
    q.R = p.R;
    q.A = profile(p.R);
    q.A_perm = rep.rows[p.R].A_perm;
    if (q.A > 0.0) {
      q.ratio = q.A_perm / q.A;
    } else {
      q.ratio = q.A_perm > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    }
    rep.max_ratio = std::max(rep.max_ratio, q.ratio);
    rep.points.push_back(q);
  }
  return rep;
}

}  // namespace mrpred
