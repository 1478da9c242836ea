#pragma once

#include <stdexcept>
#include <string>

namespace parsfm {

/// Malformed file or field; message carries the path/line of the offender.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation requires a connected graph; message names the components.
class DisconnectedGraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Geometrically degenerate input (coincident centers, ...).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// RANSAC found no consensus; the corresponding merge edge must be dropped.
class NoConsensusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace parsfm
