#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ncmart {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands built over algebras (or filtrations) with different structure.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation
/// (non-Hermitian input to a spectral routine, p < 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class IllConditionedBasis : public Error {
 public:
  IllConditionedBasis(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// A filtration whose levels fail validation; `level()` is the offending index.
class FiltrationError : public Error {
 public:
  FiltrationError(const std::string& what, std::size_t level)
      : Error(what), level_(level) {}
  std::size_t level() const { return level_; }

 private:
  std::size_t level_;
};

class AdaptednessError : public Error {
 public:
  using Error::Error;
};

class NotMartingale : public Error {
 public:
  NotMartingale(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class InvalidPartition : public Error {
 public:
  using Error::Error;
};

/// Ratio whose denominator is numerically zero.
class UndefinedRatio : public Error {
 public:
  using Error::Error;
};

}  // namespace ncmart
