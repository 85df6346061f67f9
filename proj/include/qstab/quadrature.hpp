#pragma once

#include <array>
#include <functional>

#include "qstab/common.hpp"

namespace qstab {

// Gauss(7)/Kronrod(15) node-weight sets on [-1,1]. The Kronrod extension is
// the returned value, the embedded Gauss rule drives the error estimate.
struct GK15 {
    static const std::array<double, 15> nodes;
    static const std::array<double, 15> wk;
    static const std::array<double, 8> wg; // weights for nodes 1,3,...,13 plus center
};

struct PanelEstimate {
    double value = 0.0;
    double error = 0.0;
};

PanelEstimate gk15_panel(const std::function<double(double)>& f, double lo, double hi);

struct QuadOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_depth = 20;
    // 2^max_depth panels total; adaptivity is bisection on the worst panel.
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int panels = 1;
    bool converged = true;
};

// Adaptive Gauss-Kronrod on a finite interval. Throws numerical_failure only
// through the _checked variant; callers that can tolerate a rough panel read
// the converged flag.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double lo,
                              double hi, const QuadOptions& opt = {});

double integrate_checked(const std::function<double(double)>& f, double lo,
                         double hi, const QuadOptions& opt = {});

// Integrate f over [lo, +inf) (dir=+1) or (-inf, lo] (dir=-1) by geometric
// panel continuation: panels double in width until their contribution is
// negligible against `scale`.
double integrate_tail(const std::function<double(double)>& f, double lo, int dir,
                      double first_width, double scale, const QuadOptions& opt = {});

// Evaluate several integrands sharing one (costly) weight function in a
// single K15 pass over the panel: out[j] += sum_k w_k * weight(x_k) * fs[j](x_k).
void gk15_weighted_multi(const std::function<double(double)>& weight,
                         const std::vector<std::function<double(double)>>& fs,
                         double lo, double hi, std::vector<double>& out);

} // namespace qstab
