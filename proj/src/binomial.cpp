#include "mrpred/binomial.hpp"

#include <algorithm>
#include <cmath>

namespace mrpred {

double binomial_log_pmf(std::int64_t n, std::int64_t z, double log_p) {
  if (z < 0 || z > n) return -INFINITY;
  const double nd = static_cast<double>(n);
  const double zd = static_cast<double>(z);
  // log(1 - p) computed from log p without forming p when it underflows.
  const double log_q = log_p < -700.0 ? -std::exp(log_p) : std::log1p(-std::exp(log_p));
  double out = std::lgamma(nd + 1.0) - std::lgamma(zd + 1.0) - std::lgamma(nd - zd + 1.0);
  if (z > 0) out += zd * log_p;
  if (z < n) out += (nd - zd) * log_q;
  return out;
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

BinomialWindow binomial_window(std::int64_t n, double log_p) {
  const double p = std::exp(log_p);
  const double mean = static_cast<double>(n) * p;
  const double sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
  const double half = 40.0 * sd + 200.0;
  BinomialWindow w;
  w.lo = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(mean - half)));
  w.hi = std::min<std::int64_t>(n, static_cast<std::int64_t>(std::ceil(mean + half)));
  return w;
}

}  // namespace mrpred
