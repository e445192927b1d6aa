#pragma once

#include <stdexcept>
#include <string>

namespace morsevanish {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Input that fails validation (bad config, bad expression, bad parameters).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A numerical stage could not complete (solver, integrator, bisection).
class SolverError : public Error {
public:
    using Error::Error;
};

#define MORSEVANISH_DEFINE_ERROR(Name, Base)                                  \
    class Name : public Base {                                               \
    public:                                                                  \
        explicit Name(const std::string& what) : Base(#Name ": " + what) {} \
    }

MORSEVANISH_DEFINE_ERROR(ParseError, ValidationError);
MORSEVANISH_DEFINE_ERROR(ConfigError, ValidationError);
MORSEVANISH_DEFINE_ERROR(ZeroPolynomial, ValidationError);
MORSEVANISH_DEFINE_ERROR(AlphaTooSmall, ValidationError);
MORSEVANISH_DEFINE_ERROR(UnknownEntry, ValidationError);
MORSEVANISH_DEFINE_ERROR(MissingCount, ValidationError);
MORSEVANISH_DEFINE_ERROR(Unsupported, ValidationError);

MORSEVANISH_DEFINE_ERROR(DomainViolation, SolverError);
MORSEVANISH_DEFINE_ERROR(NotPositiveDefinite, SolverError);
MORSEVANISH_DEFINE_ERROR(SolverBudgetExceeded, SolverError);
MORSEVANISH_DEFINE_ERROR(DegenerateCriticalPoint, SolverError);
MORSEVANISH_DEFINE_ERROR(MorsificationFailed, SolverError);
MORSEVANISH_DEFINE_ERROR(StepCollapse, SolverError);
MORSEVANISH_DEFINE_ERROR(UnresolvedBasin, SolverError);
MORSEVANISH_DEFINE_ERROR(NotConverged, SolverError);
MORSEVANISH_DEFINE_ERROR(DeltaFloor, SolverError);
MORSEVANISH_DEFINE_ERROR(NotChainMap, SolverError);
MORSEVANISH_DEFINE_ERROR(ResolutionTooCoarse, SolverError);
MORSEVANISH_DEFINE_ERROR(CoefficientOverflow, SolverError);

#undef MORSEVANISH_DEFINE_ERROR

}  // namespace morsevanish
