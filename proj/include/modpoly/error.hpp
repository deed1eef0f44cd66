#pragma once

#include <stdexcept>
#include <string>

namespace modpoly {

// Base of every error raised by the library. Subclasses let the CLI map
// failures onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Modulus is not a prime >= 3 (or a mismatched modulus between components).
class ModulusError : public Error {
public:
    using Error::Error;
};

/// Out-of-range residues, arity mismatches, bad widths and similar.
class ArgumentError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t position)
        : Error(msg + " (at position " + std::to_string(position) + ")"), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Requested feature lies outside what the constructions support
/// (e.g. a monomial with a zero exponent handed to the composite solver).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

/// Training loss became non-finite or exceeded the divergence bound.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, long epoch, double loss)
        : Error(msg), epoch_(epoch), loss_(loss) {}

    long epoch() const noexcept { return epoch_; }
    double loss() const noexcept { return loss_; }

private:
    long epoch_;
    double loss_;
};

} // namespace modpoly
