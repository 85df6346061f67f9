#include "qstab/rootfind.hpp"

#include <algorithm>
#include <cmath>

namespace qstab {

double solve_increasing(const std::function<double(double)>& f,
                        const std::function<double(double)>& df, double target,
                        double lo, double hi, double rel_tol) {
    double flo = f(lo) - target;
    double fhi = f(hi) - target;
    if (flo > 0.0 || fhi < 0.0)
        throw invalid_domain("solve_increasing: target not bracketed");
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;

    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double scale = std::max({std::fabs(lo), std::fabs(hi), 1.0});
        if (hi - lo <= rel_tol * scale) break;
        double fx = f(x) - target;
        if (fx == 0.0) return x;
        if (fx > 0.0)
            hi = x;
        else
            lo = x;
        double next = kNaN;
        if (df) {
            const double d = df(x);
            if (d > 0.0 && std::isfinite(d)) next = x - fx / d;
        }
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
    }
    return 0.5 * (lo + hi);
}

void expand_bracket(const std::function<double(double)>& f, double target, double x0,
                    double step, double limit_lo, double limit_hi, double& lo,
                    double& hi) {
    double f0 = f(x0) - target;
    if (f0 == 0.0) {
        lo = hi = x0;
        return;
    }
    const int dir = f0 < 0.0 ? +1 : -1; // increasing f: move right if below target
    double prev = x0;
    double s = step;
    for (int it = 0; it < 400; ++it) {
        double next = prev + dir * s;
        next = std::clamp(next, limit_lo, limit_hi);
        const double fn = f(next) - target;
        if ((dir > 0 && fn >= 0.0) || (dir < 0 && fn <= 0.0)) {
            lo = std::min(prev, next);
            hi = std::max(prev, next);
            return;
        }
        if (next == limit_lo || next == limit_hi)
            throw invalid_domain("expand_bracket: no crossing inside domain");
        prev = next;
        s *= 2.0;
    }
    throw invalid_domain("expand_bracket: runaway expansion");
}

} // namespace qstab
