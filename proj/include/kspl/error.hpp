#pragma once

#include <stdexcept>
#include <string>

namespace kspl {

/// Invalid arguments, malformed configs, schema violations. CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical guard tripped: non-finite values, training divergence, or an
/// evaluation budget cap. CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace kspl
