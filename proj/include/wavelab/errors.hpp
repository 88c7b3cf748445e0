#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wavelab {

/// Named failure modes surfaced by the library. Every thrown error carries one.
enum class ErrorKind {
    InvalidArgument,
    NonConvergence,
    InsufficientZeros,
    OutOfRange,
    Overflow,
    MatchAtNode,
    CountMismatch,
    TailTooShort,
    CflViolation,
    HypothesisViolated,
    ConeViolation,
    WitnessNotFound,
    NoContraction,
    TailBoundExceeded,
    AmbiguousClassification,
    UnknownScenario,
    VersionMismatch,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace wavelab
