#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cauda {

/// Root of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed constraint DSL. Line and column are 1-based.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t column, std::string message)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + message),
        line_(line),
        column_(column),
        message_(std::move(message)) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string message_;
};

/// An index fell outside its vocabulary. `index()` names the offending
/// element (a record number, an atom position, a selection entry).
class BoundsError : public Error {
 public:
  BoundsError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyMask : public Error {
 public:
  using Error::Error;
};

class InvalidConstraintSet : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed data file. Line is 1-based; 0 means "whole file".
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class VocabMismatch : public Error {
 public:
  using Error::Error;
};

class NonScalarLoss : public Error {
 public:
  using Error::Error;
};

class MissingLabels : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

/// Prediction files disagree on their uid sets.
class UidMismatch : public Error {
 public:
  explicit UidMismatch(std::vector<std::string> uids)
      : Error(describe(uids)), uids_(std::move(uids)) {}
  const std::vector<std::string>& uids() const noexcept { return uids_; }

 private:
  static std::string describe(const std::vector<std::string>& uids) {
    std::string out = "uid sets differ; symmetric difference:";
    for (const auto& u : uids) out += " " + u;
    return out;
  }
  std::vector<std::string> uids_;
};

class NetworkError : public Error {
 public:
  using Error::Error;
};

class AuthError : public Error {
 public:
  using Error::Error;
};

}  // namespace cauda
