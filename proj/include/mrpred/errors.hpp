#pragma once

#include <stdexcept>
#include <string>

namespace mrpred {

// Invalid parameters or configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A quantity requested outside the region where it exists, e.g. PE_n(r)
// for r > n - 3 (CLI exit code 3).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// A least-squares or leave-one-out fit that cannot be computed on the
// given training set (CLI exit code 3).
class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

// Non-fatal diagnostics; writes to stderr unless a sink is installed.
using WarningSink = void (*)(const std::string&);
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace mrpred
