#pragma once

#include <stdexcept>
#include <string>

namespace eigdist {

/// Base class for every error raised by the library. `category()` is the
/// short machine-readable tag the CLI prints as `error:<category>:`.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& what)
        : std::runtime_error(what), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

/// A scalar parameter lies outside its valid domain (e.g. sigma <= 0).
class ParameterDomainError : public Error {
public:
    explicit ParameterDomainError(const std::string& what) : Error("parameter", what) {}
};

/// Operand dimensions are incompatible.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

/// Input data is non-finite or otherwise unusable.
class InputDomainError : public Error {
public:
    explicit InputDomainError(const std::string& what) : Error("input", what) {}
};

/// A requested allocation exceeds a hard guard.
class SizeError : public Error {
public:
    explicit SizeError(const std::string& what) : Error("size", what) {}
};

/// Malformed file contents.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error("parse", what) {}
};

/// File system failure (missing file, unwritable directory).
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io", what) {}
};

/// The Fisher operator annihilated the iterate: the model is locally constant.
class RankZeroError : public Error {
public:
    explicit RankZeroError(const std::string& what) : Error("rank-zero", what) {}
};

/// Pearson correlation requested on a constant sequence.
class UndefinedCorrelationError : public Error {
public:
    explicit UndefinedCorrelationError(const std::string& what) : Error("undefined-correlation", what) {}
};

/// Non-finite gradient during training; message carries the record index.
class DiagnosticsError : public Error {
public:
    explicit DiagnosticsError(const std::string& what) : Error("diagnostics", what) {}
};

/// Psychometric data does not straddle the criterion.
class NonBracketedError : public Error {
public:
    explicit NonBracketedError(const std::string& what) : Error("non-bracketed", what) {}
};

}  // namespace eigdist
