#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simflow {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The model or approximator lacks a required capability (prior, likelihood, conjugacy).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// A parameter vector lies outside the model's support or declared domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or precondition violation detected before simulating.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// MCMC could not start from a finite log-density.
class InitializationError : public Error {
 public:
  using Error::Error;
};

/// A simulation budget ran out before enough draws were accepted.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, double acceptance_rate, std::size_t accepted,
              std::size_t proposals)
      : Error(what), acceptance_rate_(acceptance_rate), accepted_(accepted), proposals_(proposals) {}

  double acceptance_rate() const noexcept { return acceptance_rate_; }
  std::size_t accepted() const noexcept { return accepted_; }
  std::size_t proposals() const noexcept { return proposals_; }

  /// Index of the outer simulation that failed, if raised inside a nested pipeline.
  std::size_t failing_index = static_cast<std::size_t>(-1);

 private:
  double acceptance_rate_;
  std::size_t accepted_;
  std::size_t proposals_;
};

}  // namespace simflow
