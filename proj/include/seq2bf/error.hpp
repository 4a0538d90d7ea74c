#pragma once

#include <stdexcept>
#include <string>

namespace seq2bf {

// Error taxonomy. Every failure surfaced by the library derives from Error so
// the CLI can map it to exit code 1 with a single catch.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class CorpusFormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

class KeywordError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace seq2bf
