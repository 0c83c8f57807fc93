#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace morseflow {

// Base for every failure the engine reports. `kind()` is the stable,
// machine-readable name used in reports.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t offset, const std::string& message)
        : Error("syntax-error", message + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class DomainError : public Error {
public:
    DomainError(std::size_t offset, const std::string& message)
        : Error("domain-error", message + " (node at offset " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

#define MORSEFLOW_DEFINE_ERROR(Name, kind_string)                                      \
    class Name : public Error {                                                         \
    public:                                                                             \
        explicit Name(const std::string& message) : Error(kind_string, message) {}      \
    };

MORSEFLOW_DEFINE_ERROR(PreconditionError, "precondition-violation")
MORSEFLOW_DEFINE_ERROR(SingularConstraintError, "singular-constraint")
MORSEFLOW_DEFINE_ERROR(RetractionError, "retraction-failure")
MORSEFLOW_DEFINE_ERROR(DegenerateCriticalPointError, "degenerate-critical-point")
MORSEFLOW_DEFINE_ERROR(StiffFlowError, "stiff-flow")
MORSEFLOW_DEFINE_ERROR(ShootingError, "shooting-unsupported")
MORSEFLOW_DEFINE_ERROR(SignIndeterminateError, "sign-indeterminate")
MORSEFLOW_DEFINE_ERROR(ComplexInconsistencyError, "complex-inconsistency")
MORSEFLOW_DEFINE_ERROR(DualityViolationError, "duality-violation")
MORSEFLOW_DEFINE_ERROR(UnsupportedManifoldError, "unsupported-manifold")
MORSEFLOW_DEFINE_ERROR(CapExceededError, "cap-exceeded")
MORSEFLOW_DEFINE_ERROR(ClassUnknownError, "class-unknown")
MORSEFLOW_DEFINE_ERROR(ExtendedInconsistencyError, "extended-inconsistency")
MORSEFLOW_DEFINE_ERROR(OutOfTableError, "out-of-table")
MORSEFLOW_DEFINE_ERROR(DegreeMismatchError, "degree-mismatch")
MORSEFLOW_DEFINE_ERROR(ConfigError, "config-error")

#undef MORSEFLOW_DEFINE_ERROR

}  // namespace morseflow
