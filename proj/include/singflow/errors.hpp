#pragma once

#include <stdexcept>
#include <string>

namespace singflow {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
public:
  using Error::Error;
};

/// An orbit left the euclidean box that stands in for the phase space.
class DomainEscape : public Error {
public:
  DomainEscape(double time, const std::string &what)
      : Error(what), escape_time_(time) {}
  double escape_time() const noexcept { return escape_time_; }

private:
  double escape_time_;
};

/// A rescaled ball was centred on an orbit that touches the singular set.
class SingularOrbit : public Error {
public:
  using Error::Error;
};

/// An empirical measure ended up with no atoms.
class DegenerateMeasure : public Error {
public:
  using Error::Error;
};

/// Entropy estimation excluded every probe.
class EstimationFailure : public Error {
public:
  using Error::Error;
};

/// The candidate pool cannot cover the requested mass.
class InfeasibleCover : public Error {
public:
  InfeasibleCover(double max_mass, const std::string &what)
      : Error(what), max_mass_(max_mass) {}
  double max_achievable_mass() const noexcept { return max_mass_; }

private:
  double max_mass_;
};

/// Filtering a compact sample left no points.
class EmptyCompactSet : public Error {
public:
  using Error::Error;
};

/// A closed-form formula was evaluated outside its validity range.
class RangeError : public Error {
public:
  using Error::Error;
};

} // namespace singflow
