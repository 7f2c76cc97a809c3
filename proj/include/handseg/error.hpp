#pragma once

#include <stdexcept>
#include <string>

namespace handseg {

/// Bad or inconsistent input data (shapes, degenerate masks, unreadable files).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameter values supplied by the caller.
class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The occlusion splitter found no previous superpixel inside the previous
/// hands; the temporal gap between frames is too large to split reliably.
class StaleStateError : public std::runtime_error {
 public:
  StaleStateError() : std::runtime_error("stale state") {}
};

}  // namespace handseg
