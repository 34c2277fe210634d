#pragma once

#include <stdexcept>
#include <string>

namespace gridfc {

/// Invalid user input: malformed scenario files, dimension mismatches,
/// parameters outside their documented domain.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure failed: power flow did not converge, the dual
/// bracket could not be established, or an integration step produced
/// non-finite values.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace gridfc
