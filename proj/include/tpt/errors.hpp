#ifndef TPT_ERRORS_HPP
#define TPT_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace tpt {

/// Raised when an operation's mathematical precondition does not hold
/// (reducible chain, mismatched dimensions, invalid set definition, ...).
class PreconditionError : public std::runtime_error {
 public:
  explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a numerical routine fails to reach its accuracy target.
/// Carries the offending residual (or spectral-radius estimate) when known.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

enum class Severity { info, error };

/// One validation finding. `code` is a stable machine-readable tag,
/// `message` explains the violation for humans.
struct Diagnostic {
  Severity severity = Severity::error;
  std::string code;
  std::string message;
};

/// True when no error-severity diagnostic is present. Informational
/// notes do not invalidate a specification.
inline bool all_valid(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags)
    if (d.severity == Severity::error) return false;
  return true;
}

}  // namespace tpt

#endif  // TPT_ERRORS_HPP
