#ifndef WH_ERROR_HPP
#define WH_ERROR_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace wh {

// Base of every error thrown by the library. The CLI maps the three
// categories below onto process exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: orders, lambdas, alpha, grid bounds, malformed files.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

// Raised by iterative solvers; carries the objective trace up to the failure.
class ConvergenceFailure : public Error {
public:
  ConvergenceFailure(const std::string& what, std::vector<double> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

private:
  std::vector<double> trace_;
};

// Linear algebra that cannot be carried out: singular systems, undefined
// pseudo-determinants, degenerate ratios.
class NumericalFailure : public Error {
public:
  using Error::Error;
};

class SingularSystem : public NumericalFailure {
public:
  using NumericalFailure::NumericalFailure;
};

class UndefinedPdet : public NumericalFailure {
public:
  using NumericalFailure::NumericalFailure;
};

class DataInconsistency : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

} // namespace wh

#endif
