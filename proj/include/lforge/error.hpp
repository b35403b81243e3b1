#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lforge {

/// Violated precondition of an operation (bad shape, out-of-range argument).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed on-disk data. Carries the byte offset at which parsing failed.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
          detail_(what), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string detail_;
    std::size_t offset_;
};

/// Non-finite values, unreadable files and other failures at run time.
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractError(msg);
}

}  // namespace lforge
