#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qstab {

// Error taxonomy. Construction and verification routines throw; pure
// report-style checks return a report struct instead.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct invalid_parameter : error { using error::error; };
struct invalid_domain : error { using error::error; };
struct not_strictly_convex : error { using error::error; };
struct numerical_failure : error { using error::error; };
struct model_not_normalizable : error { using error::error; };
struct invariant_violation : error { using error::error; };
struct degenerate_direction : error { using error::error; };
struct degenerate_measure : error { using error::error; };
struct no_gap_detected : error { using error::error; };
struct constant_test_function : error { using error::error; };
struct invalid_cdf : error { using error::error; };
struct invalid_density : error { using error::error; };
struct io_error : error { using error::error; };

// Central tolerance block. Reports embed the block that was in effect, so a
// run is reproducible from its own output.
struct Tolerances {
    double quad_abs = 1e-12;        // adaptive quadrature absolute tolerance
    double quad_rel = 1e-10;        // adaptive quadrature relative tolerance
    int quad_max_depth = 20;        // at most 2^20 panels per integral
    double phi_rel = 1e-13;         // potential increments need extra digits
    double truncation_v = 1e-12;    // infinite ends cut where v < this
    double root_rel = 1e-12;        // bracketed root refinement
    double moment = 1e-8;           // |m1|, |m2-1|, |mh-lambda| bound
    double cdf_limit = 1e-9;        // q(a)=0, q(b)=1 defect
    double invariant_slack = 1e-9;  // slack on inequality verifications
    double stein_residual = 1e-6;   // scale factor, times (1+||f-mu f||)
    double representation_agree = 1e-7;
    double spectral_residual = 1e-6;
    double spectral_gap_floor = 1e-12;
    double ch_refine_rel = 1e-4;    // grid-refinement stability for C_h
    double ch_growth = 0.05;        // >5% growth per extension => not finite
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double sq(double x) { return x * x; }

} // namespace qstab
