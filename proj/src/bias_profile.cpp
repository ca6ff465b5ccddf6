#include "mrpred/bias_profile.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

#include "mrpred/errors.hpp"

namespace mrpred {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

WarningSink g_warning_sink = nullptr;

void validate_segments(std::span<const DescentSegment> segments) {
  if (segments.empty()) throw ConfigError("multi_descent: segments must be nonempty");
  int previous_high = 0;
  for (const auto& s : segments) {
    if (s.r_low < 1 || s.r_high < s.r_low)
      throw ConfigError("multi_descent: each segment needs 1 <= r_low <= r_high");
    if (s.r_low < previous_high)
      throw ConfigError("multi_descent: segments must satisfy r_high_k <= r_low_{k+1}");
    previous_high = s.r_high;
  }
}

// c_1 = 1; c_k matches segment k-1 at its right boundary r_high_{k-1}.
std::vector<double> continuity_constants(std::span<const DescentSegment> segments) {
  std::vector<double> c(segments.size(), 1.0);
  for (std::size_t k = 1; k < segments.size(); ++k) {
    const int boundary = segments[k - 1].r_high;
    const double left =
        c[k - 1] * double_descent_eval(segments[k - 1].r_low, segments[k - 1].r_high, boundary);
    const double right = double_descent_eval(segments[k].r_low, segments[k].r_high, boundary);
    c[k] = left / right;
  }
  return c;
}

double multi_eval(std::span<const DescentSegment> segments, std::span<const double> c, int r) {
  for (std::size_t k = 0; k < segments.size(); ++k) {
    if (r <= segments[k].r_high || k + 1 == segments.size())
      return c[k] * double_descent_eval(segments[k].r_low, segments[k].r_high, r);
  }
  return 0.0;  // unreachable
}

std::string fmt_double(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

void set_warning_sink(WarningSink sink) { g_warning_sink = sink; }

void warn(const std::string& message) {
  if (g_warning_sink != nullptr) {
    g_warning_sink(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

double double_descent_eval(int r_low, int r_high, int r) {
  if (r_low < 1 || r_high < r_low) throw ConfigError("double_descent: need 1 <= r_low <= r_high");
  if (r < 0) throw DomainError("double_descent: r must be nonnegative");
  if (r <= r_low) return 1.0 / static_cast<double>(std::max(r, 1));
  const double lead = (1.0 + std::exp(static_cast<double>(r_low - r_high))) / r_low;
  return lead / (1.0 + std::exp(static_cast<double>(r - r_high)));
}

double multi_descent_eval(std::span<const DescentSegment> segments, int r) {
  validate_segments(segments);
  if (r < 0) throw DomainError("multi_descent: r must be nonnegative");
  const auto c = continuity_constants(segments);
  return multi_eval(segments, c, r);
}

BiasProfile::BiasProfile(ProfileKind kind, double scale) : kind_(std::move(kind)), scale_(scale) {
  if (!std::isfinite(scale_) || scale_ <= 0.0)
    throw ConfigError("profile: scale must be a positive finite number");
  std::visit(Overloaded{
                 [](const HardThreshold& p) {
                   if (p.r0 < 1) throw ConfigError("hard_threshold: r0 must be >= 1");
                 },
                 [](const Exponential& p) {
                   if (!std::isfinite(p.xi) || p.xi <= 0.0)
                     throw ConfigError("exponential: xi must be positive");
                 },
                 [](const Polynomial& p) {
                   if (!std::isfinite(p.xi) || p.xi <= 0.0)
                     throw ConfigError("polynomial: xi must be positive");
                 },
                 [](const Logarithmic& p) {
                   if (!std::isfinite(p.xi) || p.xi <= 0.0)
                     throw ConfigError("logarithmic: xi must be positive");
                 },
                 [](const DoubleDescent& p) {
                   if (p.r_low < 1 || p.r_high < p.r_low)
                     throw ConfigError("double_descent: need 1 <= r_low <= r_high");
                 },
                 [this](const MultiDescent& p) {
                   validate_segments(p.segments);
                   segment_constants_ = continuity_constants(p.segments);
                 },
                 [](const Tabulated& p) {
                   double previous = INFINITY;
                   for (double v : p.values) {
                     if (!std::isfinite(v) || v < 0.0)
                       throw ConfigError("tabulated: values must be finite and nonnegative");
                     if (v > previous) throw ConfigError("tabulated: values must be nonincreasing");
                     previous = v;
                   }
                 },
             },
             kind_);
}

BiasProfile BiasProfile::hard_threshold(int r0, double scale) {
  return BiasProfile(HardThreshold{r0}, scale);
}
BiasProfile BiasProfile::exponential(double xi, double scale) {
  return BiasProfile(Exponential{xi}, scale);
}
BiasProfile BiasProfile::polynomial(double xi, double scale) {
  return BiasProfile(Polynomial{xi}, scale);
}
BiasProfile BiasProfile::logarithmic(double xi, double scale) {
  return BiasProfile(Logarithmic{xi}, scale);
}
BiasProfile BiasProfile::double_descent(int r_low, int r_high, double scale) {
  return BiasProfile(DoubleDescent{r_low, r_high}, scale);
}
BiasProfile BiasProfile::multi_descent(std::vector<DescentSegment> segments, double scale) {
  return BiasProfile(MultiDescent{std::move(segments)}, scale);
}
BiasProfile BiasProfile::tabulated(std::vector<double> values, double scale) {
  return BiasProfile(Tabulated{std::move(values)}, scale);
}

double BiasProfile::operator()(int r) const {
  if (r < 0) throw DomainError("bias profile: r must be nonnegative");
  const double base = std::visit(
      Overloaded{
          [r](const HardThreshold& p) { return r < p.r0 ? 1.0 : 0.0; },
          [r](const Exponential& p) { return std::exp(-p.xi * r); },
          [r](const Polynomial& p) { return std::pow(r + 1.0, -p.xi); },
          [r](const Logarithmic& p) { return std::pow(std::log(2.0) / std::log(r + 2.0), p.xi); },
          [r](const DoubleDescent& p) { return double_descent_eval(p.r_low, p.r_high, r); },
          [this, r](const MultiDescent& p) { return multi_eval(p.segments, segment_constants_, r); },
          [r](const Tabulated& p) {
            return static_cast<std::size_t>(r) < p.values.size() ? p.values[r] : 0.0;
          },
      },
      kind_);
  return scale_ * base;
}

double BiasProfile::increment(int k) const {
  if (k < 1) throw DomainError("increment: k must be >= 1");
  // HardThreshold puts the whole mass on covariate r0; computing it directly
  // avoids 1 - 0 style rounding elsewhere.
  if (const auto* p = std::get_if<HardThreshold>(&kind_)) return k == p->r0 ? scale_ : 0.0;
  const double d = (*this)(k - 1) - (*this)(k);
  return d > 0.0 ? d : 0.0;
}

std::string BiasProfile::family() const {
  return std::visit(Overloaded{
                        [](const HardThreshold&) { return std::string("hard_threshold"); },
                        [](const Exponential&) { return std::string("exponential"); },
                        [](const Polynomial&) { return std::string("polynomial"); },
                        [](const Logarithmic&) { return std::string("logarithmic"); },
                        [](const DoubleDescent&) { return std::string("double_descent"); },
                        [](const MultiDescent&) { return std::string("multi_descent"); },
                        [](const Tabulated&) { return std::string("tabulated"); },
                    },
                    kind_);
}

std::string BiasProfile::describe() const {
  std::string body = std::visit(
      Overloaded{
          [](const HardThreshold& p) { return "r0=" + std::to_string(p.r0); },
          [](const Exponential& p) { return "xi=" + fmt_double(p.xi); },
          [](const Polynomial& p) { return "xi=" + fmt_double(p.xi); },
          [](const Logarithmic& p) { return "xi=" + fmt_double(p.xi); },
          [](const DoubleDescent& p) {
            return "r_low=" + std::to_string(p.r_low) + ",r_high=" + std::to_string(p.r_high);
          },
          [](const MultiDescent& p) { return "segments=" + std::to_string(p.segments.size()); },
          [](const Tabulated& p) { return "size=" + std::to_string(p.values.size()); },
      },
      kind_);
  if (scale_ != 1.0) body += ",scale=" + fmt_double(scale_);
  return family() + "(" + body + ")";
}

double eval(const BiasProfile& profile, int r) { return profile(r); }
double increment(const BiasProfile& profile, int k) { return profile.increment(k); }

}  // namespace mrpred
