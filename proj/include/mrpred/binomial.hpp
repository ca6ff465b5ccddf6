#pragma once

#include <cstdint>

namespace mrpred {

// log P(Z = z) for Z ~ Binomial(n, p), with p given through log(p) so that
// p = M^-k stays representable for any depth k.
double binomial_log_pmf(std::int64_t n, std::int64_t z, double log_p);

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

// Sums of f(z) * P(Z = z) over z >= 1, restricted to a window around the
// mean (40 sd plus 200) outside of which the mass is negligible in double
// precision.
struct BinomialWindow {
  std::int64_t lo = 1;
  std::int64_t hi = 0;
};
BinomialWindow binomial_window(std::int64_t n, double log_p);

}  // namespace mrpred
