#pragma once

#include <stdexcept>
#include <string>

namespace sdnloc {

// Bad user input: malformed files, out-of-range arguments, shape mismatches.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Not enough data to carry out an estimate (e.g. too few pixels at an
// intensity level, no smooth blocks in a region).
class InsufficientDataError : public std::runtime_error {
public:
    InsufficientDataError(const std::string& msg, std::size_t count)
        : std::runtime_error(msg), count_(count) {}
    std::size_t count() const { return count_; }

private:
    std::size_t count_;
};

}  // namespace sdnloc
