#pragma once

#include <stdexcept>
#include <string>

namespace cycledeg {

/// Base of every typed failure raised by the library. `kind()` is the stable
/// error name printed by the command line tool.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define CYCLEDEG_DEFINE_ERROR(Name)                                     \
    class Name : public Error {                                         \
    public:                                                             \
        explicit Name(const std::string& message) : Error(#Name, message) {} \
    }

// expression parsing and evaluation
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t position, const std::string& message)
        : Error("SyntaxError", "at position " + std::to_string(position) + ": " + message),
          position_(position) {}

    [[nodiscard]] std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

CYCLEDEG_DEFINE_ERROR(UnknownVariable);
CYCLEDEG_DEFINE_ERROR(UnknownFunction);
CYCLEDEG_DEFINE_ERROR(NonFiniteValue);
CYCLEDEG_DEFINE_ERROR(InvalidSystem);

// integration
CYCLEDEG_DEFINE_ERROR(StepSizeUnderflow);
CYCLEDEG_DEFINE_ERROR(NonFiniteState);
CYCLEDEG_DEFINE_ERROR(GrazingContact);
CYCLEDEG_DEFINE_ERROR(InvalidArgument);

// cycles
CYCLEDEG_DEFINE_ERROR(NoConvergence);
CYCLEDEG_DEFINE_ERROR(DegenerateCycle);
CYCLEDEG_DEFINE_ERROR(SectionMiss);

// bifurcation function and degrees
CYCLEDEG_DEFINE_ERROR(SingularVariationalMatrix);
CYCLEDEG_DEFINE_ERROR(BoundaryZero);
CYCLEDEG_DEFINE_ERROR(DegenerateEquilibrium);
CYCLEDEG_DEFINE_ERROR(BoundaryZeroOfPsi);
CYCLEDEG_DEFINE_ERROR(DimensionTooLarge);
CYCLEDEG_DEFINE_ERROR(UnderResolved);
CYCLEDEG_DEFINE_ERROR(ZeroOnBoundary);
CYCLEDEG_DEFINE_ERROR(HypothesisViolation);

// verification
CYCLEDEG_DEFINE_ERROR(SingularJacobian);

#undef CYCLEDEG_DEFINE_ERROR

}  // namespace cycledeg
