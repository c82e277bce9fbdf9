// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mmrf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (shape, range, ordering).
class ContractError : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity showed up where only finite values are allowed.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

class OutOfBoundsError : public Error {
public:
    using Error::Error;
};

/// File-system or codec failure. The message always carries the path.
class IoError : public Error {
public:
    using Error::Error;
};

/// A file decoded but its content does not match the expected schema.
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace mmrf
