#pragma once

#include <stdexcept>
#include <string>

namespace cqm {

/// Base of every error raised by the toolkit. `kind()` is a stable tag used
/// in machine-readable diagnostics.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "Error"; }
};

/// Caller passed something outside an operation's contract.
class InvalidArgument : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "InvalidArgument"; }
};

/// Every kernel evaluation was zero; the bandwidth window holds no record.
class NoMass : public Error {
public:
    explicit NoMass(const std::string& what, long slot = -1) : Error(what), slot_(slot) {}
    const char* kind() const noexcept override { return "NoMass"; }
    long slot() const noexcept { return slot_; }

private:
    long slot_;
};

/// Malformed CSV/JSON input.
class DataError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "DataError"; }
};

/// A modelling assumption was violated (e.g. recourse infeasible or unbounded).
class ModelError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "ModelError"; }
};

/// The simplex engine could not recover from numerical trouble.
class NumericalError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "NumericalError"; }
};

/// Busy-period partition failed the strong-duality check.
class DegenerateDual : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "DegenerateDual"; }
};

/// Solver-level failure: iteration cap, missing incumbent, and similar.
class SolverError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "SolverError"; }
};

}  // namespace cqm
