// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace ites {

/// Error categories. Each maps to exactly one HTTP status in the service layer.
enum class ErrorKind {
  BadRequest,        // malformed input, invalid arguments
  NotFound,          // unknown session, missing file
  Conflict,          // wrong phase, non-adjacent merge, GMR violation
  FailedDependency,  // daemon or backend could not produce a result
};

const char* to_string(ErrorKind kind);

/// Exception carrying a category and optional structured detail
/// (e.g. {"segment": "3", "daemon": "trajectory"}).
class Error : public std::runtime_error {
 public:
  using Detail = std::map<std::string, std::string>;

  Error(ErrorKind kind, const std::string& message, Detail detail = {})
      : std::runtime_error(message), kind_(kind), detail_(std::move(detail)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const Detail& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  Detail detail_;
};

inline Error bad_request(const std::string& msg, Error::Detail d = {}) {
  return Error(ErrorKind::BadRequest, msg, std::move(d));
}
inline Error not_found(const std::string& msg, Error::Detail d = {}) {
  return Error(ErrorKind::NotFound, msg, std::move(d));
}
inline Error conflict(const std::string& msg, Error::Detail d = {}) {
  return Error(ErrorKind::Conflict, msg, std::move(d));
}
inline Error failed_dependency(const std::string& msg, Error::Detail d = {}) {
  return Error(ErrorKind::FailedDependency, msg, std::move(d));
}

}  // namespace ites
