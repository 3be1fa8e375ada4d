#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace icq {

/// Bad input from the user: malformed files, failed validation, unknown
/// identifiers. The CLI maps these to exit status 2, the service to 4xx.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A record that could not be parsed, with its 1-based line number.
class ParseError : public ValidationError {
 public:
  ParseError(std::string source, std::size_t line, const std::string& message)
      : ValidationError(source + ":" + std::to_string(line) + ": " + message),
        source_(std::move(source)),
        line_(line),
        message_(message) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string source_;
  std::size_t line_;
  std::string message_;
};

/// Validation failure that concerns a list of instance ids (unknown ids,
/// missing predictions, incomplete question groups).
class IdListError : public ValidationError {
 public:
  IdListError(const std::string& message, std::vector<std::string> ids)
      : ValidationError(format(message, ids)), ids_(std::move(ids)) {}

  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  static std::string format(const std::string& message, const std::vector<std::string>& ids) {
    std::string out = message + ":";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i == 20) {
        out += " ... (" + std::to_string(ids.size()) + " total)";
        break;
      }
      out += " " + ids[i];
    }
    return out;
  }

  std::vector<std::string> ids_;
};

}  // namespace icq
