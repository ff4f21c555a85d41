#pragma once

#include <stdexcept>
#include <string>

namespace meshfit {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed text in a file being read; carries the 1-based line number.
struct ParseError : Error {
  ParseError(const std::string& msg, int line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
  int line;
};

/// Input uses a feature outside the supported subset (e.g. non-triangular faces).
struct UnsupportedFormatError : Error {
  using Error::Error;
};

/// A face with (near-)zero area where a well-defined plane is required.
struct DegenerateFaceError : Error {
  DegenerateFaceError(const std::string& msg, int face)
      : Error(msg + " (face " + std::to_string(face) + ")"), face(face) {}
  int face;
};

/// A vertex or face with no graph neighbors where neighbors are required.
struct NoNeighborError : Error {
  using Error::Error;
};

/// Total surface area is zero; nothing can be sampled or measured.
struct ZeroAreaError : Error {
  using Error::Error;
};

/// A sampled point set does not belong to the mesh it is being used with.
struct ProvenanceError : Error {
  using Error::Error;
};

struct EmptyInputError : Error {
  using Error::Error;
};

/// Dimension or combinatorics mismatch between operands.
struct ShapeError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

/// 2D-only operation applied to geometry that leaves the z = 0 plane.
struct PlanarityError : Error {
  using Error::Error;
};

/// Optimization produced a non-finite loss.
struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace meshfit
