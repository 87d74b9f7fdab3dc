#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hsieval {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates the invariants of the type it was meant to construct.
class InvariantError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ChannelError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class PaletteError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. `offset()` is the byte position where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Error tied to a single pixel of a raster.
class PixelError : public Error {
 public:
  PixelError(const std::string& what, std::size_t x, std::size_t y)
      : Error(what + " at pixel (" + std::to_string(x) + ", " + std::to_string(y) + ")"), x_(x), y_(y) {}
  std::size_t x() const noexcept { return x_; }
  std::size_t y() const noexcept { return y_; }

 private:
  std::size_t x_;
  std::size_t y_;
};

/// Annotation pixel that is neither black nor white.
class AnnotationError : public PixelError {
 public:
  using PixelError::PixelError;
};

/// RGB triplet without an identifier in the requested domain.
class MappingError : public PixelError {
 public:
  using PixelError::PixelError;
};

/// Validity index needs at least one non-noise point.
class EmptyPartitionError : public Error {
 public:
  using Error::Error;
};

/// Validity index is not defined for the partition (e.g. fewer than two clusters).
class UndefinedIndexError : public Error {
 public:
  using Error::Error;
};

/// Ground-truth matching found no cluster identifiers to score.
class EmptyClusteringError : public Error {
 public:
  using Error::Error;
};

}  // namespace hsieval
