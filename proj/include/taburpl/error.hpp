#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace taburpl {

using NodeId = std::uint32_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Some nodes have no route to the sink.
class ConnectivityError : public Error {
 public:
  ConnectivityError(std::string what, std::vector<NodeId> orphans)
      : Error(std::move(what)), orphans_(std::move(orphans)) {}

  const std::vector<NodeId>& orphans() const noexcept { return orphans_; }

 private:
  std::vector<NodeId> orphans_;
};

class UndefinedCorrelation : public Error {
 public:
  using Error::Error;
};

/// A normalization context was used against a snapshot it was not built from.
class ContextError : public Error {
 public:
  using Error::Error;
};

class InvalidPath : public Error {
 public:
  using Error::Error;
};

class InvalidAssignment : public Error {
 public:
  using Error::Error;
};

class SizeLimitError : public Error {
 public:
  using Error::Error;
};

class InvalidReference : public Error {
 public:
  using Error::Error;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class PairingError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace taburpl
