#pragma once

#include <stdexcept>
#include <string>

namespace slelqg {

/// Input outside the mathematical domain of an operation (non-positive kappa,
/// gamma outside its phase, non-finite values).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Evaluation at a singular locus: the origin, the real axis for bulk
/// quantities, coincident Green-function arguments.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Use of a forward-flow state after the tracked point was swallowed, or of a
/// real point that reached the tip of the slit.
class LifecycleError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A circle, probe point, or image point falls outside the sampled grid.
class GeometryError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Invalid experiment or sampler configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// No welded partner exists for the requested boundary point.
class NoPartnerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two algebraically identical closed forms disagreed beyond tolerance.
class ConsistencyFault : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace slelqg
