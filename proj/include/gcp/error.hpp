#pragma once

#include <stdexcept>
#include <string>

namespace gcp {

// Input or configuration that violates a documented contract. The CLI maps
// this to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A referenced entity (sample id, group) does not exist.
class NotFoundError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Anything that goes wrong while doing the work: I/O, network, exhausted
// resources. The CLI maps this to exit code 2.
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

class NetworkError : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

class ProtocolError : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

} // namespace gcp
