#pragma once

#include <functional>
#include <stdexcept>

namespace famc {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Adaptive Simpson integration with an absolute tolerance. Suitable for the
// smooth but sharply peaked densities integrated here; throws when the
// recursion cannot reach the tolerance.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth = 48);

}  // namespace famc
