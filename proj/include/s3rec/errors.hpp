#pragma once

#include <stdexcept>
#include <string>

namespace s3rec {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Channel-level failures: peer closed, socket error, truncated stream.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what) : Error("transport: " + what) {}
};

// Well-formed channel, malformed content: unknown frame type, bad digest,
// shape mismatch between what a peer announced and what it sent.
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error("protocol: " + what) {}
};

// Caller misuse of an API contract (scale mismatch, triple reuse, ...).
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("usage: " + what) {}
};

// Invalid configuration (unsupported key size, T >= n, unknown config key).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config: " + what) {}
};

// Numeric input outside the encodable/encryptable domain.
class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what) : Error("range: " + what) {}
};

// Matrix dimension mismatch.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape: " + what) {}
};

// Malformed input file.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("parse: " + what) {}
};

// Training diverged or produced non-finite values.
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error("training: " + what) {}
};

}  // namespace s3rec
