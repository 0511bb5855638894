#pragma once

#include <stdexcept>
#include <string>

namespace liketrack {

// Bad input data: unreadable files, malformed records, invalid specs.
// The CLI maps this family to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A response map whose peak is not positive cannot be thresholded relative
// to its peak. Trackers catch this and fall back to transition sampling.
class DegenerateMapError : public std::runtime_error {
public:
    DegenerateMapError() : std::runtime_error("degenerate map: non-positive peak") {}
};

}  // namespace liketrack
