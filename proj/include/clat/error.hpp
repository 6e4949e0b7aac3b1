#pragma once

#include <stdexcept>
#include <string>

namespace clat {

// Bad external input: malformed files, unknown labels or ids, shape mismatches
// in user-supplied data. The CLI maps this to exit code 3.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: factorization breakdown, non-finite intermediates,
// eigenvalues outside tolerance. The CLI maps this to exit code 4.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace clat
