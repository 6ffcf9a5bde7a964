#ifndef GLASSTN_ERRORS_HPP
#define GLASSTN_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace glasstn {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedTensorError : Error { using Error::Error; };
struct InvalidPartitionError : Error { using Error::Error; };
struct InvalidSpecError : Error { using Error::Error; };
struct InvalidInputError : Error { using Error::Error; };
struct StaleEnvironmentError : Error { using Error::Error; };
struct GaugeFailureError : Error { using Error::Error; };
struct DegenerateMessageError : Error { using Error::Error; };
struct IllConditionedStateError : Error { using Error::Error; };
struct FittingDegenerateError : Error { using Error::Error; };
struct BudgetExceededError : Error { using Error::Error; };
struct SizeCapError : Error { using Error::Error; };
struct UndefinedMetricError : Error { using Error::Error; };
struct FitFailureError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Fixed-point iteration ran out of sweeps; carries the residual trace.
struct NonConvergenceError : Error {
  NonConvergenceError(const std::string& msg, std::vector<double> trace)
      : Error(msg), residual_trace(std::move(trace)) {}
  std::vector<double> residual_trace;
};

}  // namespace glasstn

#endif
