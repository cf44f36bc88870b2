#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ol {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Audio byte stream that cannot be split into 16-bit samples.
class MalformedStream : public Error {
 public:
  MalformedStream(std::size_t offset, const std::string& what)
      : Error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class QueueClosed : public Error {
 public:
  QueueClosed() : Error("queue closed") {}
};

class ChannelClosed : public Error {
 public:
  ChannelClosed() : Error("control channel closed") {}
};

class SequencingError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ProfileMismatch : public Error {
 public:
  using Error::Error;
};

// Carries the offending config keys so callers can report them precisely.
class ConfigError : public Error {
 public:
  ConfigError(std::vector<std::string> fields, const std::string& what)
      : Error(what), fields_(std::move(fields)) {}
  const std::vector<std::string>& fields() const noexcept { return fields_; }

 private:
  std::vector<std::string> fields_;
};

class BackendError : public Error {
 public:
  enum class Kind { Unavailable, Timeout, Protocol, Application };
  BackendError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class TraceError : public Error {
 public:
  TraceError(std::size_t line, const std::string& what)
      : Error("trace line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace ol

namespace ol {

// A frame payload that the encoder could not decode.
class DecodeError : public Error {
 public:
  using Error::Error;
};

}  // namespace ol
