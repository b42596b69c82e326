#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adaptk {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied value violates an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed input file. line() is 1-based; 0 means the whole file.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// An eigen-solver or linear solve did not produce a usable result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Shortest paths requested on a neighbor graph with more than one component.
class DisconnectedGraphError : public Error {
 public:
  explicit DisconnectedGraphError(std::size_t components)
      : Error("neighbor graph is disconnected (" + std::to_string(components) +
              " connected components); increase K or restrict to the largest component"),
        components_(components) {}
  DisconnectedGraphError(std::size_t components, const std::string& what)
      : Error(what), components_(components) {}

  std::size_t component_count() const noexcept { return components_; }

 private:
  std::size_t components_;
};

}  // namespace adaptk
