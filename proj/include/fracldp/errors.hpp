#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fracldp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two objects that must live on the same grid (or have matching lengths) do not.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// An argument lies outside the documented range (non-finite data, p < 1, radius >= L, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class SaturationError : public Error {
public:
    SaturationError(const std::string& what, std::size_t index) : Error(what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// A time step produced a state whose sup-norm exceeded the guard (or went non-finite).
class BlowUpError : public Error {
public:
    BlowUpError(const std::string& what, int step) : Error(what), step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

class OptimizationError : public Error {
public:
    using Error::Error;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

class DependencyError : public Error {
public:
    using Error::Error;
};

}  // namespace fracldp
