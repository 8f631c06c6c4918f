#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace constctl {

// Base of every failure raised by the library. Callers that only care about
// "did the numerics work" can catch this; the CLI maps the subclasses onto
// exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatch or malformed value at an API boundary.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Model or configuration violating its construction invariants.
class InvalidModel : public Error {
 public:
  using Error::Error;
};

// A linear system whose reciprocal condition estimate fell below the
// singularity threshold. Also raised when a spectral condition fails.
class SingularSystem : public Error {
 public:
  SingularSystem(const std::string& what, double rcond)
      : Error(what), rcond_(rcond) {}
  double rcond() const { return rcond_; }

 private:
  double rcond_;
};

// An iterative decomposition that did not converge.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t iterations)
      : Error(what), iterations_(iterations) {}
  std::size_t iterations() const { return iterations_; }

 private:
  std::size_t iterations_;
};

class RankDeficient : public Error {
 public:
  RankDeficient(const std::string& what, double smallest_pivot)
      : Error(what), smallest_pivot_(smallest_pivot) {}
  double smallest_pivot() const { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

// State left the representable region (non-finite or above the cap).
class Divergence : public Error {
 public:
  Divergence(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class IntegrationBudgetExceeded : public Error {
 public:
  IntegrationBudgetExceeded(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

// Target does not lie on the first-order reachable chart.
class TargetOffChart : public Error {
 public:
  TargetOffChart(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace constctl
