#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace midrange {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input is outside the open cone of positive definite matrices.
class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(const std::string& what,
                               std::optional<std::size_t> index = std::nullopt)
      : Error(index ? what + " (matrix index " + std::to_string(*index) + ")"
                    : what),
        index_(index) {}

  std::optional<std::size_t> index() const { return index_; }

 private:
  std::optional<std::size_t> index_;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class CertificateViolation : public Error {
 public:
  CertificateViolation(const std::string& what, std::size_t index)
      : Error(what + " (constraint index " + std::to_string(index) + ")"),
        index_(index) {}

  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

}  // namespace midrange
