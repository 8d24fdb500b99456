#pragma once

// Exception types thrown across the library. All derive from std exceptions
// so callers can catch coarsely; the distinct types exist for tests and for
// precise CLI diagnostics.

#include <stdexcept>
#include <string>

namespace ok {

struct EmptySample : std::invalid_argument {
    explicit EmptySample(const std::string& what) : std::invalid_argument(what) {}
};

// All observations identical where a spread is required (mixture order > 1).
struct DegenerateSample : std::invalid_argument {
    explicit DegenerateSample(const std::string& what) : std::invalid_argument(what) {}
};

struct InvalidOrder : std::invalid_argument {
    explicit InvalidOrder(const std::string& what) : std::invalid_argument(what) {}
};

struct InvalidC0 : std::invalid_argument {
    explicit InvalidC0(const std::string& what) : std::invalid_argument(what) {}
};

// Bad numeric range (grid bounds, permutation counts, replicate counts, ...).
struct InvalidRange : std::invalid_argument {
    explicit InvalidRange(const std::string& what) : std::invalid_argument(what) {}
};

// Matrix/sample dimensions disagree.
struct ShapeMismatch : std::invalid_argument {
    explicit ShapeMismatch(const std::string& what) : std::invalid_argument(what) {}
};

// A p-value outside [0, 1] or an index outside its table.
struct OutOfRange : std::out_of_range {
    explicit OutOfRange(const std::string& what) : std::out_of_range(what) {}
};

// Frequency band selects no DFT bin.
struct EmptyBand : std::invalid_argument {
    explicit EmptyBand(const std::string& what) : std::invalid_argument(what) {}
};

// Region with no contributing sources.
struct EmptyRegion : std::runtime_error {
    explicit EmptyRegion(const std::string& what) : std::runtime_error(what) {}
};

// Dendrogram queried for a leaf it does not contain.
struct UnknownLeaf : std::out_of_range {
    explicit UnknownLeaf(const std::string& what) : std::out_of_range(what) {}
};

// Unreadable or malformed input file.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ok
