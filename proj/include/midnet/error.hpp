#pragma once

#include <stdexcept>
#include <string>

namespace midnet {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument (shape, range, reference) was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An iterative solver ran out of its iteration budget before reaching its tolerance.
class BudgetExhausted : public Error {
public:
    using Error::Error;
};

} // namespace midnet
