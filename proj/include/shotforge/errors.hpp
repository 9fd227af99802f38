#pragma once

#include <stdexcept>
#include <string>

namespace shotforge {

/// Root of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class TooFewSamples : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

/// No numeric token could be extracted from a model response.
class Unparseable : public Error {
public:
    using Error::Error;
};

/// Any failure to obtain a response from an estimator backend.
class BackendError : public Error {
public:
    using Error::Error;
};

class TransportError : public BackendError {
public:
    using BackendError::BackendError;
};

class HttpError : public BackendError {
public:
    HttpError(int status, const std::string& what)
        : BackendError(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

class TimeoutError : public BackendError {
public:
    using BackendError::BackendError;
};

class AuthError : public BackendError {
public:
    using BackendError::BackendError;
};

class MissingFixture : public BackendError {
public:
    using BackendError::BackendError;
};

}  // namespace shotforge
