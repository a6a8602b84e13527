#pragma once

#include <stdexcept>
#include <string>

namespace grassketch {

// Incompatible shapes: k out of range, n mismatch between operands, ragged inputs.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Sketches built from different ensembles (or with different m) were combined.
class EnsembleMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed binary/text input: bad magic, truncated payload, unparsable manifest.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset-level problems: missing files, empty manifests, inconsistent entries.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid experiment or solver configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace grassketch
