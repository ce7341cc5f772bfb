#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sstories {

// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or violated precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A corpus or config file could not be read or failed validation.
class CorpusError : public Error {
 public:
  CorpusError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Text could not be parsed into the expected structure.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A parsed value lies outside its permitted range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Network failure, or transient failures that outlasted the retry budget.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Permanent non-2xx answer from an endpoint.
class HttpError : public Error {
 public:
  HttpError(int status, const std::string& body_excerpt)
      : Error("HTTP " + std::to_string(status) + ": " + body_excerpt), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace sstories
