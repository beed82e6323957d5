#pragma once

#include <stdexcept>
#include <string>

namespace comad {

/// Coarse error category. Maps one-to-one onto the C API status codes.
enum class ErrorKind {
    InvalidArgument,
    Io,
    Decode,
    UnsupportedVersion,
    Training,
    Data,
    Cancelled,
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(ErrorKind::InvalidArgument, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

/// Feature-file and model-file decoding failures carry a reason so callers
/// (and tests) can tell a bad magic from a short payload.
enum class DecodeReason {
    BadMagic,
    Truncated,
    DimensionMismatch,
    Corrupt,
};

class DecodeError : public Error {
public:
    DecodeError(DecodeReason reason, const std::string& what)
        : Error(ErrorKind::Decode, what), reason_(reason) {}
    DecodeReason reason() const noexcept { return reason_; }

private:
    DecodeReason reason_;
};

class UnsupportedVersion : public Error {
public:
    explicit UnsupportedVersion(const std::string& what) : Error(ErrorKind::UnsupportedVersion, what) {}
};

/// Training failures. The reason distinguishes the documented cases.
enum class TrainingReason {
    EmptyDataset,
    AllComponentsFiltered,
    ZeroMeanFeature,
    Other,
};

class TrainingError : public Error {
public:
    TrainingError(TrainingReason reason, const std::string& what)
        : Error(ErrorKind::Training, what), reason_(reason) {}
    TrainingReason reason() const noexcept { return reason_; }

private:
    TrainingReason reason_;
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class Cancelled : public Error {
public:
    explicit Cancelled(const std::string& what) : Error(ErrorKind::Cancelled, what) {}
};

/// Raised by OTSU on a field with fewer than two distinct quantized levels.
class DegenerateInput : public Error {
public:
    explicit DegenerateInput(const std::string& what) : Error(ErrorKind::Data, what) {}
};

} // namespace comad
