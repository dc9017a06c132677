#ifndef HESSVAR_ERRORS_HPP
#define HESSVAR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hessvar {

/// Bad parameters or malformed input. The CLI maps this to exit code 2.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// A profile outside the admissible class was handed to an operation that requires it.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// A numerical procedure failed (non-convergence, step-size underflow, ...).
/// The CLI maps this to exit code 3.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hessvar

#endif  // HESSVAR_ERRORS_HPP
