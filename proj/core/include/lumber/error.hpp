#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lumber {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input could not be turned into a Document or QA table.
class CorpusError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public CorpusError {
public:
    using CorpusError::CorpusError;
};

class DecodeError : public CorpusError {
public:
    using CorpusError::CorpusError;
};

class MalformedRecordError : public CorpusError {
public:
    MalformedRecordError(const std::string& path, std::size_t line, const std::string& what)
        : CorpusError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class MissingColumnError : public CorpusError {
public:
    explicit MissingColumnError(const std::string& column)
        : CorpusError("missing column '" + column + "'"), column_(column) {}

    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

/// A completion or embedding service failed to produce a response.
class BackendError : public Error {
public:
    using Error::Error;
};

/// A response did not contain a paragraph ID. Retryable.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A response named an ID outside the group's legal answer range. Retryable.
class OutOfRangeError : public Error {
public:
    OutOfRangeError(std::size_t id, std::size_t lo_exclusive, std::size_t hi_inclusive)
        : Error("ID " + std::to_string(id) + " outside (" + std::to_string(lo_exclusive) + ", " +
                std::to_string(hi_inclusive) + "]"),
          id_(id) {}

    std::size_t id() const noexcept { return id_; }

private:
    std::size_t id_;
};

class EmbeddingError : public Error {
public:
    EmbeddingError(std::size_t unit_index, const std::string& what)
        : Error("embedding failed at unit " + std::to_string(unit_index) + ": " + what),
          unit_index_(unit_index) {}

    std::size_t unit_index() const noexcept { return unit_index_; }

private:
    std::size_t unit_index_;
};

class DimensionMismatchError : public Error {
public:
    DimensionMismatchError(std::size_t expected, std::size_t got)
        : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                std::to_string(got)) {}
};

}  // namespace lumber
