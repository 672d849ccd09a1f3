#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rttlens {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Caller violated an operation precondition (bad dimensions, non-finite data, ...).
struct InvalidInputError : Error {
  using Error::Error;
};

/// The SVD backend failed to converge; usually signals ill-conditioned or corrupt input.
struct SvdFailureError : Error {
  using Error::Error;
};

/// A byte stream does not match the expected file format (wrong header, bad grid, ...).
struct FormatError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

/// A matrix construction produced no rows or no columns.
struct EmptyMatrixError : Error {
  using Error::Error;
};

/// An operation needed endpoint tags that are absent; `offending_ids` lists the
/// rows/columns that are missing them.
struct TaggedDataError : Error {
  TaggedDataError(const std::string& what, std::vector<std::string> ids)
      : Error(what), offending_ids(std::move(ids)) {}
  std::vector<std::string> offending_ids;
};

/// A synthetic-benchmark spec violates its own invariants.
struct InvalidSpecError : Error {
  using Error::Error;
};

}  // namespace rttlens
