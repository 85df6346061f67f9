#pragma once

#include <functional>

#include "qstab/common.hpp"

namespace qstab {

// Bracketed root of an increasing function: bisection until the bracket is
// safe, then Newton polish that falls back to bisection whenever a step
// leaves the bracket. `df` may be null, in which case pure bisection runs to
// tolerance. Relative tolerance on x.
double solve_increasing(const std::function<double(double)>& f,
                        const std::function<double(double)>& df, double target,
                        double lo, double hi, double rel_tol = 1e-12);

// Expand a bracket around x0 for an increasing function until f crosses
// `target`, doubling the step. Throws invalid_domain if no crossing is found
// inside [limit_lo, limit_hi].
void expand_bracket(const std::function<double(double)>& f, double target, double x0,
                    double step, double limit_lo, double limit_hi, double& lo,
                    double& hi);

} // namespace qstab
