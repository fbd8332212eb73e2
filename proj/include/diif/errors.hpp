#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace diif {

// Every error the library raises derives from Error so callers can catch one
// type at the CLI boundary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& parameter, const std::string& what)
      : Error(what + " (parameter '" + parameter + "')"), parameter_(parameter) {}

  const std::string& parameter() const noexcept { return parameter_; }

 private:
  std::string parameter_;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnsupportedVersionError : public Error {
 public:
  UnsupportedVersionError(unsigned found, unsigned supported)
      : Error("unsupported format version " + std::to_string(found) + " (expected " +
              std::to_string(supported) + ")"),
        found_(found) {}

  unsigned found() const noexcept { return found_; }

 private:
  unsigned found_;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(what + ": " + path), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace diif
