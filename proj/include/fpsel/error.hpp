#pragma once

#include <stdexcept>
#include <string>

namespace fpsel {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int col)
      : Error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg), line_(line), col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_;
  int col_;
};

class TypeError : public Error {
 public:
  using Error::Error;
};

class NoSuchOperator : public Error {
 public:
  NoSuchOperator(const std::string& surface, const std::string& type)
      : Error("no operator for `" + surface + "` at " + type), surface_(surface), type_(type) {}
  const std::string& surface() const { return surface_; }
  const std::string& type() const { return type_; }

 private:
  std::string surface_;
  std::string type_;
};

class TargetError : public Error {
 public:
  using Error::Error;
};

class SamplingExhausted : public Error {
 public:
  using Error::Error;
};

class NoWellTypedProgram : public Error {
 public:
  using Error::Error;
};

class NodeLimitExceeded : public Error {
 public:
  NodeLimitExceeded() : Error("e-graph node limit exceeded") {}
};

}  // namespace fpsel
