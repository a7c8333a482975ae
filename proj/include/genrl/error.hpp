#pragma once

#include <stdexcept>
#include <string>

namespace genrl {

// Caller violated a documented precondition (shape mismatch, bad config value).
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

// A linear solve hit a rank-deficient system and no fallback was allowed.
class SingularMatrixError : public std::runtime_error {
 public:
  explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values or a diverging iteration; carries where it happened.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Required input file is absent or unreadable.
class MissingArtifactError : public std::runtime_error {
 public:
  explicit MissingArtifactError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

}  // namespace genrl
