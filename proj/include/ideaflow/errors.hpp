#pragma once

#include <stdexcept>
#include <string>

namespace ideaflow {

/// Bad input: malformed files, out-of-range parameters, violated preconditions.
/// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A generator / reward / embedder backend failed after its retry budget.
/// The CLI maps this to exit code 3.
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& what, std::string raw_text = {})
      : std::runtime_error(what), raw_text_(std::move(raw_text)) {}

  const std::string& raw_text() const noexcept { return raw_text_; }

 private:
  std::string raw_text_;
};

}  // namespace ideaflow
