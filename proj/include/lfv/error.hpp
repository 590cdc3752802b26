#pragma once

#include <stdexcept>
#include <string>

namespace lfv {

/// Invalid input to an operation (domain violation, bad ordering, bad spec string).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not reach its target accuracy or produced a
/// non-finite value. `achieved` carries the best accuracy reached, if known.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what, double achieved = -1.0)
        : std::runtime_error(what), achieved_(achieved) {}

    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// The measure is the zero measure (or otherwise has no coalescence at all)
/// where a positive rate is required.
class DegenerateMeasureError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The measure is valid but outside what an entry point supports
/// (e.g. an atom at 1 for the spatial analytics).
class UnsupportedMeasureError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Requested size exceeds a configured memory cap.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Attempt to step a chain that sits in its absorbing state.
class AbsorbingStateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A structural identity that must hold exactly was violated.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace lfv
