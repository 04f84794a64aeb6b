#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geomtree {

// All library errors derive from Error so callers can catch the whole
// family with one handler while still distinguishing the usual suspects.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed tree input: dangling parent/child links, cycles, a vertex of
// degree two, a root with two children, disconnected arenas.
struct StructureError : Error {
  using Error::Error;
};

// Invalid model parameters (p outside (0,1), negative coefficients, c < 1).
struct ParameterError : Error {
  using Error::Error;
};

// A requested distribution has no support (all coefficients zero).
struct UndefinedDistributionError : Error {
  using Error::Error;
};

// Sampling hit the vertex budget before the tree was finished.  Callers
// that run ensembles catch this, count it, and redraw.
struct GenerationAborted : Error {
  using Error::Error;
};

// Input text could not be parsed; position is a 0-based byte offset.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t pos)
      : Error(what + " (at offset " + std::to_string(pos) + ")"), position(pos) {}
  std::size_t position;
};

// A parsed node has a child count the tree model cannot hold (anything
// but a leaf or exactly two children).
struct UnsupportedArityError : ParseError {
  using ParseError::ParseError;
};

// The requested output cannot represent the value (e.g. serializing the
// empty tree).
struct NotRepresentableError : Error {
  using Error::Error;
};

}  // namespace geomtree
