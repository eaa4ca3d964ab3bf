#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

// Error taxonomy. Every throwing operation in the library throws a subclass
// of ncdkit::Error; the CLI maps them to exit code 2.

namespace ncdkit {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// compressor
class UnknownCompressorError : public Error {
 public:
  explicit UnknownCompressorError(const std::string& id)
      : Error("unknown compressor: " + id) {}
};
class CompressorFailureError : public Error {
 public:
  using Error::Error;
};
class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

// distances / ngd
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};
class ZeroMarginalError : public Error {
 public:
  using Error::Error;
};
class DegenerateTotalError : public Error {
 public:
  using Error::Error;
};

// corpus
class MissingFileError : public Error {
 public:
  explicit MissingFileError(const std::string& path)
      : Error("missing file: " + path) {}
};
class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(const std::string& id)
      : Error("duplicate document id: " + id) {}
};
class UnknownStepError : public Error {
 public:
  explicit UnknownStepError(const std::string& step)
      : Error("unknown normalization step: " + step) {}
};
class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::size_t byte_offset)
      : Error(what + " at byte offset " + std::to_string(byte_offset)),
        offset(byte_offset) {}
  std::size_t offset;
};

// matrix / tree files
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t at_line,
             std::size_t at_column)
      : Error(what + " at line " + std::to_string(at_line) + ", column " +
              std::to_string(at_column)),
        line(at_line),
        column(at_column) {}
  std::size_t line;
  std::size_t column;
};
class ValidationError : public Error {
 public:
  using Error::Error;
};

// cluster
class TooFewLeavesError : public Error {
 public:
  using Error::Error;
};
class UnknownLabelError : public Error {
 public:
  explicit UnknownLabelError(const std::string& label)
      : Error("unknown leaf label: " + label) {}
};

// toyk
class BudgetTooLargeError : public Error {
 public:
  using Error::Error;
};
class UnknownResultError : public Error {
 public:
  using Error::Error;
};

// ngd providers
class EmptyCorpusError : public Error {
 public:
  using Error::Error;
};
class StoreCorruptError : public Error {
 public:
  using Error::Error;
};
class TransportError : public Error {
 public:
  using Error::Error;
};
class ResponseParseError : public Error {
 public:
  using Error::Error;
};
class RateLimitedError : public Error {
 public:
  using Error::Error;
};
class AuthFailureError : public Error {
 public:
  using Error::Error;
};

}  // namespace ncdkit
