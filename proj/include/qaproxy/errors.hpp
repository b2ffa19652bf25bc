#pragma once

#include <stdexcept>
#include <string>

namespace qaproxy {

// Root of the project's error hierarchy. Callers that need to distinguish
// validation failures from I/O or service failures catch the subclasses.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A file could not be opened, read, or written.
struct IoError : Error {
    using Error::Error;
};

// An input file violates its schema. Message carries "path:line: what".
struct ParseError : Error {
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : Error(what), line_(0) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

// A QA record references a claim id that is not in the dataset.
struct DanglingClaimId : Error {
    using Error::Error;
};

// A claim has no QA pairs left to select from.
struct EmptyQASet : Error {
    using Error::Error;
};

// The QA service did not produce a usable response within the retry budget.
struct ServiceUnreachable : Error {
    using Error::Error;
};

// The QA service answered, but the payload violates the wire schema.
struct MalformedResponse : Error {
    using Error::Error;
};

// Vector or matrix dimensions do not line up.
struct DimMismatch : Error {
    using Error::Error;
};

// A store-backed embedding lookup failed.
struct MissingKey : Error {
    using Error::Error;
};

struct EmptyScores : Error {
    using Error::Error;
};

struct EmptyDevSet : Error {
    using Error::Error;
};

struct EmptyTrainSplit : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

// A model variant was asked for an input group it does not have.
struct MissingInput : Error {
    using Error::Error;
};

// Explanations need attention weights; concat variants have none.
struct VariantWithoutWeights : Error {
    using Error::Error;
};

}  // namespace qaproxy
