#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ade {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text. `line` is 1-based; 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Well-formed input that violates a model invariant (dangling reference,
// duplicate id, range order...).
class ValidationError : public Error {
public:
    using Error::Error;
};

class UnknownIdError : public Error {
public:
    explicit UnknownIdError(const std::string& id)
        : Error("unknown id '" + id + "'"), id_(id) {}

    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class CycleError : public Error {
public:
    explicit CycleError(std::vector<std::string> cycle);

    const std::vector<std::string>& cycle() const noexcept { return cycle_; }

private:
    std::vector<std::string> cycle_;
};

inline CycleError::CycleError(std::vector<std::string> cycle)
    : Error([&] {
          std::string msg = "cycle detected:";
          for (const auto& id : cycle)
              msg += " " + id;
          return msg;
      }()),
      cycle_(std::move(cycle)) {}

} // namespace ade
