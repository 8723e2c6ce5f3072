#pragma once

#include <stdexcept>
#include <string>

namespace hjb {

/// Caller supplied an argument outside the operation's domain.
class InvalidArgument : public std::invalid_argument {
public:
    explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

/// Input data (a field, a table, a file) violates a required property.
class InvalidData : public std::runtime_error {
public:
    explicit InvalidData(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical routine reached a state its preconditions should have excluded.
class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace hjb
