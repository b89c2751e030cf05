/// @file error.hpp
/// @brief Exception hierarchy shared by every genius module.

#pragma once

#include <stdexcept>
#include <string>

namespace genius {

/// Base class; catch this to handle any library failure.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a precondition (shape mismatch, bad argument).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Mathematical operation undefined at the given input (zero RMS, zero norm, zero variance).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Text or structured input could not be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Parsed input violates a schema or data invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A remote call failed before a response could be read (connection, status, body).
class TransportError : public Error {
public:
    using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace genius
