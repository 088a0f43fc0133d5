#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace msk {

// Base of every error raised by the library. Callers that only care about
// "something went wrong with the inputs" can catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ZeroTotalFlow : public Error {
public:
    explicit ZeroTotalFlow(std::size_t day)
        : Error("zero total flow on day index " + std::to_string(day)), day_(day) {}
    std::size_t day() const noexcept { return day_; }

private:
    std::size_t day_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("parse error at line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class VersionError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class EmptyDataset : public Error {
public:
    using Error::Error;
};

class MissingHour : public Error {
public:
    explicit MissingHour(const std::string& hour)
        : Error("flows contain no rows for hour " + hour) {}
};

class SingularHessian : public Error {
public:
    using Error::Error;
};

class CyclicGraph : public Error {
public:
    using Error::Error;
};

class EmptySelection : public Error {
public:
    using Error::Error;
};

class MissingSegmentData : public Error {
public:
    explicit MissingSegmentData(std::size_t segment)
        : Error("no speed data for segment " + std::to_string(segment)), segment_(segment) {}
    std::size_t segment() const noexcept { return segment_; }

private:
    std::size_t segment_;
};

class BadFoldCount : public Error {
public:
    using Error::Error;
};

class ZeroVariance : public Error {
public:
    using Error::Error;
};

class BoundaryFraction : public Error {
public:
    explicit BoundaryFraction(std::size_t day)
        : Error("driving fraction is 0 or 1 on day index " + std::to_string(day)), day_(day) {}
    std::size_t day() const noexcept { return day_; }

private:
    std::size_t day_;
};

class InsufficientDof : public Error {
public:
    using Error::Error;
};

}  // namespace msk
