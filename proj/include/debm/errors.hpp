#pragma once

#include <stdexcept>
#include <string>

namespace debm {

/// Malformed or insufficient input (bad file, unknown label, unmet precondition).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure while fitting or evaluating a model.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace debm
