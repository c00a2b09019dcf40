#pragma once

#include <stdexcept>
#include <string>

namespace unitok {

// Error taxonomy mapped onto CLI exit codes:
//   ConfigError -> 2, DataError -> 3, NumericError -> 4.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Raised when a computation produced NaN/Inf or an otherwise unusable result.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace unitok
