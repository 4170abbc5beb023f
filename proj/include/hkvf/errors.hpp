#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hkvf {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define HKVF_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

// mobius
HKVF_DEFINE_ERROR(IdentityInput);
HKVF_DEFINE_ERROR(DegenerateTriple);
HKVF_DEFINE_ERROR(SingularMatrix);

// surfaces
HKVF_DEFINE_ERROR(DegenerateLattice);
HKVF_DEFINE_ERROR(InvalidSurface);

// geometry
HKVF_DEFINE_ERROR(NotOnBoundary);
HKVF_DEFINE_ERROR(SingularRegion);
HKVF_DEFINE_ERROR(NonPositiveMetric);
HKVF_DEFINE_ERROR(InvalidTangent);

// conformal maps
HKVF_DEFINE_ERROR(OutsideDomain);
HKVF_DEFINE_ERROR(BranchViolation);
HKVF_DEFINE_ERROR(DomainEscape);

// flowgroup
HKVF_DEFINE_ERROR(GroupLawViolation);
HKVF_DEFINE_ERROR(InconsistentFamily);
HKVF_DEFINE_ERROR(NotAffine);
HKVF_DEFINE_ERROR(ZeroGenerator);
HKVF_DEFINE_ERROR(AdditivityViolation);
HKVF_DEFINE_ERROR(InsufficientSamples);

// classify
HKVF_DEFINE_ERROR(NotHkvf);
HKVF_DEFINE_ERROR(ReductionMismatch);
HKVF_DEFINE_ERROR(SymmetryMismatch);
HKVF_DEFINE_ERROR(TorusFixedPoint);
HKVF_DEFINE_ERROR(FixedPointInDomain);
HKVF_DEFINE_ERROR(GeodesicEscape);
HKVF_DEFINE_ERROR(NonOrthogonal);
HKVF_DEFINE_ERROR(InvalidCut);

#undef HKVF_DEFINE_ERROR

/// Malformed expression source. `offset` is a byte offset into the source.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string& expected)
      : Error("SyntaxError at offset " + std::to_string(offset) + ": expected " + expected),
        offset_(offset),
        expected_(expected) {}
  std::size_t offset() const noexcept { return offset_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::string expected_;
};

class UnknownIdentifier : public Error {
 public:
  UnknownIdentifier(std::size_t offset, const std::string& name)
      : Error("UnknownIdentifier '" + name + "' at offset " + std::to_string(offset)),
        offset_(offset),
        name_(name) {}
  std::size_t offset() const noexcept { return offset_; }
  const std::string& name() const noexcept { return name_; }

 private:
  std::size_t offset_;
  std::string name_;
};

/// Evaluation left the real domain of an operator (log of a non-positive value,
/// sqrt of a negative value, division by zero, non-finite result).
class EvalDomainError : public Error {
 public:
  EvalDomainError(const std::string& node, double value)
      : Error("EvalDomainError in " + node + " at value " + std::to_string(value)),
        node_(node),
        value_(value) {}
  const std::string& node() const noexcept { return node_; }
  double value() const noexcept { return value_; }

 private:
  std::string node_;
  double value_;
};

/// Config file problem, located by 1-based line and column.
class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, std::size_t column, const std::string& what)
      : Error("config:" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace hkvf
