#ifndef TORUS_CYCLES_ERRORS_HPP
#define TORUS_CYCLES_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace torus_cycles {

// Argument outside the documented domain of an operation.
class invalid_argument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Radius or edge probability outside the range where the model is defined.
class out_of_range : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// A series that did not converge, a clamping guard that tripped, or a
// threshold that does not exist.
class numerical_failure : public std::runtime_error {
public:
    explicit numerical_failure(const std::string& what, int cycle_length = 0)
        : std::runtime_error(what), cycle_length_(cycle_length) {}

    // Offending cycle length when the failure came from a cycle-probability
    // series, 0 otherwise.
    int cycle_length() const noexcept { return cycle_length_; }

private:
    int cycle_length_;
};

// Request exceeds the size an exponential-cost oracle accepts.
class capacity_error : public std::length_error {
public:
    using std::length_error::length_error;
};

}  // namespace torus_cycles

#endif  // TORUS_CYCLES_ERRORS_HPP
