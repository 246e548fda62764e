#pragma once

#include <stdexcept>
#include <string>

namespace mhd {

// Invalid grid / solver / experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Precondition of an operation was violated by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Access to the reconstruction vectors at xi1 in {0, +-1/2}.
class SingularBasisError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Quadrature or finite-difference resolution could not be reached.
class NumericalAccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A hard diagnostic invariant (e.g. |A| <= E^2/2) failed.
class DiagnosticIntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IncompleteHistoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AuditResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AuditInapplicableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FitDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SnapshotFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values (or a violated advective time-step bound) during time
// stepping. Carries the last time at which the state was still valid.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, double last_valid_time)
      : std::runtime_error(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

}  // namespace mhd
