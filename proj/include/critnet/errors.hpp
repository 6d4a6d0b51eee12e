#pragma once

#include <stdexcept>
#include <string>

namespace critnet {

/// Invalid simulation or fit configuration (bad flag values, bad parameter
/// ranges). Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or unusable input data (CSV parse failures, non-monotonic
/// dates). Maps to CLI exit code 3.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Not enough usable points for the requested statistic. Maps to CLI exit
/// code 4.
class InsufficientDataError : public std::runtime_error {
public:
    explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace critnet
