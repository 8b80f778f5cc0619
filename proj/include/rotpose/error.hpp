// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace rotpose {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inputs disagree on shape: schema mismatch, wrong frame tag, empty raster.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Malformed JSON or otherwise unreadable document.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Document parsed, but its content does not fit the skeleton schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Estimator backend failed (nonzero exit, crashed adapter, ...).
class BackendError : public Error {
public:
    using Error::Error;
};

class TimeoutError : public BackendError {
public:
    using BackendError::BackendError;
};

/// Adapter ran but did not honour the file protocol.
class ProtocolError : public BackendError {
public:
    using BackendError::BackendError;
};

class NoCandidateError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or invocation.
class UsageError : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace rotpose
