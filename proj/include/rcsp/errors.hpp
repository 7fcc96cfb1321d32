#pragma once

#include <stdexcept>
#include <string>

namespace rcsp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input files or schema violations.
struct ParseError : Error {
    using Error::Error;
};

// Instance with an empty constraint list has no defined value.
struct DegenerateInstanceError : Error {
    using Error::Error;
};

// A configured size cap would be exceeded (brute force, core search, ...).
struct CapExceededError : Error {
    using Error::Error;
};

// The local-consistency search died on every value of some variable.
// Signals a wrong bounded-width witness or an internal bug.
struct WidthGuaranteeViolated : Error {
    using Error::Error;
};

// A pattern-axiom (P1/P2/P3) assumption failed; message carries the witness.
struct NotWeakPragueError : Error {
    using Error::Error;
};

// SDP vectors out of tolerance for the requested pipeline level.
struct ToleranceContractError : Error {
    using Error::Error;
};

// Rounding pipeline invariant failed (1-minimality of J, J' solve, ...).
struct PipelineError : Error {
    using Error::Error;
};

}  // namespace rcsp
