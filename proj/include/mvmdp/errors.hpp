#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvmdp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One violated model invariant, with the coordinates that violate it.
struct Violation {
  enum class Kind {
    kEmptyStateSpace,
    kNoActions,
    kTransitionSum,
    kNegativeProbability,
    kBadSuccessor,
    kDuplicateSuccessor,
    kNonFiniteReward,
    kInitialDistributionSize,
    kInitialDistributionSum,
    kNegativeInitialMass,
    kDiscountRange,
  };

  Kind kind;
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t state = kNone;
  std::size_t action = kNone;
  std::string message;
};

/// The model failed validation; carries the full violation report.
class ModelError : public Error {
 public:
  explicit ModelError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// A policy picks an action outside A(x).
class InadmissibleActionError : public Error {
 public:
  InadmissibleActionError(std::size_t state, std::size_t action, std::size_t num_actions);
  std::size_t state() const noexcept { return state_; }

 private:
  std::size_t state_;
};

/// Stationary distribution does not exist uniquely or could not be computed.
class ErgodicityError : public Error {
 public:
  using Error::Error;
};

/// An iterative method exhausted its iteration budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or parameter document.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A combinatorial budget (policy enumeration, state space) was exceeded.
class CapacityError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvmdp
