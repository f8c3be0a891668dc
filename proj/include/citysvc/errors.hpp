#pragma once

#include <stdexcept>
#include <string>

namespace citysvc {

// Base of every error the library throws. Callers that only care about
// "something in the platform failed" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad names, out-of-range parameters, schema violations.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A referenced entity (topic, node, block, subscription) does not exist.
class NotFoundError : public Error {
 public:
  NotFoundError(std::string kind, std::string id)
      : Error(kind + " not found: " + id), kind_(std::move(kind)), id_(std::move(id)) {}

  const std::string& kind() const noexcept { return kind_; }
  const std::string& id() const noexcept { return id_; }

 private:
  std::string kind_;
  std::string id_;
};

// City document could not be turned into a graph. `offending_id` names the
// node/edge/block that failed, empty for document-level problems.
class LoadError : public Error {
 public:
  LoadError(const std::string& message, std::string offending_id = {})
      : Error(message), offending_id_(std::move(offending_id)) {}

  const std::string& offending_id() const noexcept { return offending_id_; }

 private:
  std::string offending_id_;
};

class StoreError : public Error {
 public:
  using Error::Error;
};

}  // namespace citysvc
