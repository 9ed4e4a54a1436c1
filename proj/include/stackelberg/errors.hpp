#pragma once

#include <stdexcept>
#include <string>

namespace stackelberg {

// Base class for all library errors. The `exit_code` groups errors into the
// categories the CLI reports: 2 validation, 3 condition violation, 4 blow-up,
// 5 I/O.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, int exit_code)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

// ---- validation errors (exit 2) ----

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& what) : Error(what, 2) {}
};

struct AsymmetryError : Error {
  explicit AsymmetryError(const std::string& what) : Error(what, 2) {}
};

struct HorizonError : Error {
  explicit HorizonError(const std::string& what) : Error(what, 2) {}
};

struct NonFiniteError : Error {
  explicit NonFiniteError(const std::string& what) : Error(what, 2) {}
};

struct OutOfHorizon : Error {
  explicit OutOfHorizon(const std::string& what) : Error(what, 2) {}
};

struct InsufficientData : Error {
  explicit InsufficientData(const std::string& what) : Error(what, 2) {}
};

// ---- solvability errors (exit 3) ----

struct ConvexityViolation : Error {
  explicit ConvexityViolation(const std::string& what) : Error(what, 3) {}
};

struct SingularMatrix : Error {
  explicit SingularMatrix(const std::string& what) : Error(what, 3) {}
};

struct ConditionViolation : Error {
  explicit ConditionViolation(const std::string& what) : Error(what, 3) {}
};

// ---- runtime blow-up (exit 4) ----

struct BlowUp : Error {
  explicit BlowUp(const std::string& what) : Error(what, 4) {}
};

// ---- I/O (exit 5) ----

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(what, 5) {}
};

}  // namespace stackelberg
