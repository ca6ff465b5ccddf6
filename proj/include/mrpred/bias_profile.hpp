#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mrpred {

// Resolution-bias families. Each evaluates A(r) for integer r >= 0 under a
// fixed canonical parameterization:
//   HardThreshold   A(r) = 1{r < r0}
//   Exponential     A(r) = exp(-xi r)
//   Polynomial      A(r) = (r + 1)^-xi
//   Logarithmic     A(r) = [log 2 / log(r + 2)]^xi
//   DoubleDescent   r^-1 up to r_low, logistic tail centred at r_high
//   MultiDescent    repeated double-descent segments joined continuously
//   Tabulated       explicit values, zero past the end of the table
struct HardThreshold {
  int r0 = 1;
};
struct Exponential {
  double xi = 1.0;
};
struct Polynomial {
  double xi = 1.0;
};
struct Logarithmic {
  double xi = 1.0;
};
struct DoubleDescent {
  int r_low = 30;
  int r_high = 60;
};
struct DescentSegment {
  int r_low = 0;
  int r_high = 0;
};
struct MultiDescent {
  std::vector<DescentSegment> segments;
};
struct Tabulated {
  std::vector<double> values;
};

using ProfileKind = std::variant<HardThreshold, Exponential, Polynomial, Logarithmic,
                                 DoubleDescent, MultiDescent, Tabulated>;

class BiasProfile {
 public:
  // Throws ConfigError if the parameters do not define a nonnegative,
  // nonincreasing, vanishing bias.
  explicit BiasProfile(ProfileKind kind, double scale = 1.0);

  static BiasProfile hard_threshold(int r0, double scale = 1.0);
  static BiasProfile exponential(double xi, double scale = 1.0);
  static BiasProfile polynomial(double xi, double scale = 1.0);
  static BiasProfile logarithmic(double xi, double scale = 1.0);
  static BiasProfile double_descent(int r_low, int r_high, double scale = 1.0);
  static BiasProfile multi_descent(std::vector<DescentSegment> segments, double scale = 1.0);
  static BiasProfile tabulated(std::vector<double> values, double scale = 1.0);

  // A(r); r < 0 is a precondition violation (DomainError).
  double operator()(int r) const;
  // delta_k^2 = A(k - 1) - A(k), k >= 1.
  double increment(int k) const;

  const ProfileKind& kind() const { return kind_; }
  double scale() const { return scale_; }

  // Lower-case family tag as used in the JSON schema ("exponential", ...).
  std::string family() const;
  // Human-readable tag including parameters, e.g. "exponential(xi=1)".
  std::string describe() const;

 private:
  ProfileKind kind_;
  double scale_;
  // Continuity multipliers c_k for MultiDescent, c_1 = 1.
  std::vector<double> segment_constants_;
};

double eval(const BiasProfile& profile, int r);
double increment(const BiasProfile& profile, int k);

// Two-branch bias with a dip at r_low and a second drop around r_high.
// r = 0 is evaluated as r = 1 so that the first branch stays finite.
double double_descent_eval(int r_low, int r_high, int r);

// Piecewise composition of double-descent segments; segment k covers
// (r_high_{k-1}, r_high_k] and the last segment extends to infinity.
// Throws ConfigError for unordered or empty segment lists.
double multi_descent_eval(std::span<const DescentSegment> segments, int r);

}  // namespace mrpred
