#pragma once

#include <stdexcept>
#include <string>

namespace guidesim {

/// Malformed input text (network CSV, scenario file, kernel spec string).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No path exists between the requested nodes.
class UnreachableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace guidesim
