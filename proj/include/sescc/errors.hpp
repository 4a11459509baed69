#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sescc {

/// Raised by iterative solvers that exhaust their budget or blow up.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_residual, int iterations,
                   std::vector<double> trace = {})
      : std::runtime_error(what),
        last_residual_(last_residual),
        iterations_(iterations),
        trace_(std::move(trace)) {}

  double last_residual() const noexcept { return last_residual_; }
  int iterations() const noexcept { return iterations_; }
  /// Per-iteration diagnostic (residual norm or energy spread).
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  double last_residual_;
  int iterations_;
  std::vector<double> trace_;
};

class DegenerateGroundStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sescc
