#pragma once

#include <stdexcept>
#include <string>

namespace ltsf {

// Every failure raised by the library derives from Error. The CLI maps the
// category to its exit code (2 input/parse, 3 config/shape, 4 numeric).
enum class ErrorCategory { input, config, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(ErrorCategory::config, "shape error: " + what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, "config error: " + what) {}
};

class WindowError : public Error {
public:
    explicit WindowError(const std::string& what) : Error(ErrorCategory::config, "window too long: " + what) {}
};

// Backward called with a cache that does not belong to the current parameters.
class ContractError : public Error {
public:
    explicit ContractError(const std::string& what) : Error(ErrorCategory::config, "contract error: " + what) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(ErrorCategory::input, "parse error: " + what) {}
};

class LoadError : public Error {
public:
    explicit LoadError(const std::string& what) : Error(ErrorCategory::input, "load error: " + what) {}
};

class OrderError : public Error {
public:
    explicit OrderError(const std::string& what) : Error(ErrorCategory::input, "order error: " + what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorCategory::numeric, "numeric error: " + what) {}
};

}  // namespace ltsf
