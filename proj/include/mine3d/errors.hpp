#pragma once

#include <stdexcept>
#include <string>

namespace mine3d {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An operation that requires at least one element received none.
struct EmptyInput : Error {
  EmptyInput() : Error("empty input") {}
  explicit EmptyInput(const std::string& what) : Error(what) {}
};

// A map query fell outside the raster bounds.
struct OutOfMap : Error {
  explicit OutOfMap(const std::string& what) : Error(what) {}
};

// A lane query was issued against a graph with no lanes.
struct EmptyMap : Error {
  EmptyMap() : Error("lane graph has no lanes") {}
};

// A mask references a camera id with no calibration.
struct BadCalibration : Error {
  explicit BadCalibration(const std::string& what) : Error(what) {}
};

// A label carries a class id outside the configured class table.
struct UnknownClass : Error {
  explicit UnknownClass(const std::string& what) : Error(what) {}
};

// Scene generation could not place an object without overlap.
struct PlacementFailed : Error {
  explicit PlacementFailed(const std::string& what) : Error(what) {}
};

// Error metrics were requested for a match set with no true positives.
struct NoTruePositives : Error {
  NoTruePositives() : Error("no true positives") {}
};

// A file could not be read, parsed, or written. Always names the path.
struct IoError : Error {
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace mine3d
