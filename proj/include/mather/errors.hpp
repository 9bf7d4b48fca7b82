#pragma once

#include <stdexcept>
#include <string>

namespace mather {

/// Base class of every numerical failure raised by the library.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integrator produced a non-finite state.
class NonFiniteState : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The angle chart is undefined at zero velocity.
class ZeroVelocity : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Every restart of a loop minimization hit the iteration cap.
class NoConvergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The first-integral level is not a graph over x at the requested point.
class NoGraph : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Conjugation maximizer sits on the table boundary.
class BoundaryAttained : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Too many invalid nodes while building a table.
class TableBuildError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Bad argument or violated precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidArgument(message);
}

}  // namespace mather
