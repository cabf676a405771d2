#pragma once

#include <stdexcept>
#include <string>

namespace mltm {

// Bad input: malformed documents, schema violations, out-of-domain arguments.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally valid request that exceeds a configured resource gate
// (enumeration caps, exact-inference size limits).
struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mltm
