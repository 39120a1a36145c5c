#pragma once

#include <stdexcept>
#include <string>

namespace spikeline {

// Broad failure classes. The CLI maps kConfig to exit code 2 and kData to 3.
enum class ErrorKind {
  kConfig,  // invalid parameters, out-of-range indices, shape mismatches
  kData,    // malformed or truncated input bytes
  kIo,      // filesystem failures
};

// Finer-grained reasons, mostly so decoders can report distinct failures.
enum class ErrorCode {
  kInvalidArgument,
  kOutOfBounds,
  kShapeMismatch,
  kNonFinite,
  kEmptyInput,
  kBadMagic,
  kTruncated,
  kDimensionOverflow,
  kTrailingBytes,
  kMalformedHeader,
  kUnsupportedMaxval,
  kUnsupportedVersion,
  kNotFound,
  kIoFailure,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorKind kind() const noexcept;

 private:
  ErrorCode code_;
};

inline ErrorKind Error::kind() const noexcept {
  switch (code_) {
    case ErrorCode::kBadMagic:
    case ErrorCode::kTruncated:
    case ErrorCode::kDimensionOverflow:
    case ErrorCode::kTrailingBytes:
    case ErrorCode::kMalformedHeader:
    case ErrorCode::kUnsupportedMaxval:
    case ErrorCode::kUnsupportedVersion:
      return ErrorKind::kData;
    case ErrorCode::kNotFound:
    case ErrorCode::kIoFailure:
      return ErrorKind::kIo;
    default:
      return ErrorKind::kConfig;
  }
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace spikeline
