#pragma once

#include <stdexcept>
#include <string>

namespace pulsenoise {

/// Invalid parameters or inconsistent configuration. Raised before any work
/// is done; a rejected configuration leaves no partial output.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trace file could not be read or parsed.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An analysis precondition failed (window out of bounds, degenerate fit,
/// mismatched spectra, ...).
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An output file or directory could not be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pulsenoise
