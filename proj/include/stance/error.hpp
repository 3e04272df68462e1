#pragma once

#include <stdexcept>
#include <string>

namespace stance {

// Malformed or inconsistent input data. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

// A violated internal cross-check. The CLI maps this to exit code 3.
class InternalError : public std::runtime_error {
public:
    explicit InternalError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

}  // namespace stance
