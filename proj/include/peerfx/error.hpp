#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace peerfx {

enum class ErrorKind {
  InvalidInput,
  UnknownNode,
  SelfLoop,
  NonPositiveWeight,
  DuplicateEdge,
  MissingValue,
  EmptySample,
  Separation,
  RankDeficient,
  SingularMatrix,
  Degenerate,
  Parse,
  Io,
  Usage,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Thrown by the GLM fitters; carries the names of the columns that are linear
// combinations of earlier ones.
class RankDeficientError : public Error {
 public:
  RankDeficientError(const std::string& what, std::vector<std::string> columns)
      : Error(ErrorKind::RankDeficient, what), columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  std::vector<std::string> columns_;
};

}  // namespace peerfx
