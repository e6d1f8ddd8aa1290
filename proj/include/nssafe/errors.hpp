#pragma once

#include <stdexcept>
#include <string>

namespace nssafe {

// Error hierarchy shared across the library. Everything derives from
// std::runtime_error so callers can catch coarsely; the CLI maps each
// type to a stable exit code.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ArityError : std::runtime_error {
    explicit ArityError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnknownBenchmark : std::runtime_error {
    explicit UnknownBenchmark(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyDataset : std::runtime_error {
    explicit EmptyDataset(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nssafe
