#pragma once

#include <stdexcept>
#include <string>

namespace ranp {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A mining row offers no candidate other than the groundtruth.
class NoCandidate : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class TrainingDiverged : public Error {
public:
    using Error::Error;
};

class IncompatibleCheckpoint : public Error {
public:
    using Error::Error;
};

/// Dataset file errors carry the 1-based line they were raised on (0 when
/// the problem is not tied to a line, e.g. a video without captions).
class DatasetError : public Error {
public:
    DatasetError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ParseError : public DatasetError {
public:
    using DatasetError::DatasetError;
};

class DanglingReference : public DatasetError {
public:
    using DatasetError::DatasetError;
};

class DimensionMismatch : public DatasetError {
public:
    using DatasetError::DatasetError;
};

class DuplicateId : public DatasetError {
public:
    using DatasetError::DatasetError;
};

}  // namespace ranp
