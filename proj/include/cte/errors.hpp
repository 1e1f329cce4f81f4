#pragma once

#include <stdexcept>
#include <string>

namespace cte {

// Failure classes double as process exit codes for the CLI.
enum class ErrorClass : int {
    kIo = 2,
    kValidation = 3,
    kDegenerate = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}

    ErrorClass error_class() const noexcept { return cls_; }
    int exit_code() const noexcept { return static_cast<int>(cls_); }

private:
    ErrorClass cls_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorClass::kIo, what) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorClass::kValidation, what) {}
};

class DegenerateError : public Error {
public:
    explicit DegenerateError(const std::string& what) : Error(ErrorClass::kDegenerate, what) {}
};

// A correlation coefficient is undefined because one input has no variance.
class UndefinedCorrelationError : public DegenerateError {
public:
    explicit UndefinedCorrelationError(const std::string& what) : DegenerateError(what) {}
};

// The reference prediction has no foreground, so a foreground-restricted
// score has nothing to measure.
class DegenerateReferenceError : public DegenerateError {
public:
    explicit DegenerateReferenceError(const std::string& what) : DegenerateError(what) {}
};

const char* to_string(ErrorClass cls) noexcept;

} // namespace cte
