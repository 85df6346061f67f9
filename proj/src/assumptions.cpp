#include <algorithm>
#include <cmath>
#include <sstream>

#include "qstab/grid.hpp"
#include "qstab/model.hpp"

namespace qstab {

namespace {

// inf h over one truncation of the interval, sampled at grid nodes plus a
// log-spaced refinement of each outer zone.
double inf_h_truncated(const DiffusionSpec& spec, const Grid& grid, double extend) {
    double inf = kInf;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double h = std::isnan(grid.edge_w[i])
                             ? spec.h(grid.x[i])
                             : (grid.x[i] < 0.0 ? spec.left : spec.right)
                                   .edge->h_of_w(grid.edge_w[i]);
        inf = std::min(inf, h);
    }
    // Extension samples beyond the grid: push infinite ends outward by the
    // factor, finite linear edges inward by its square root.
    for (int side = 0; side < 2; ++side) {
        const EndpointBehavior& eb = side == 0 ? spec.left : spec.right;
        const double xend = side == 0 ? grid.x.front() : grid.x.back();
        for (int j = 1; j <= 64; ++j) {
            const double f = double(j) / 64.0;
            if (!eb.finite) {
                const double x = xend * (1.0 + (extend - 1.0) * f);
                inf = std::min(inf, spec.h(x));
            } else if (eb.edge) {
                const double w0 = side == 0 ? grid.edge_w.front() : grid.edge_w.back();
                const double w = w0 * std::pow(1.0 / extend, f);
                inf = std::min(inf, eb.edge->h_of_w(w));
            }
        }
    }
    return inf;
}

bool growth_ok(const DiffusionSpec& spec, const Grid& grid, int side, std::string& note) {
    const EndpointBehavior& eb = side == 0 ? spec.left : spec.right;
    const double slack = 1e-9;
    std::ostringstream os;
    if (!eb.finite) {
        const double t_out = std::fabs(side == 0 ? grid.x.front() : grid.x.back());
        const double t_in = eb.neighborhood;
        if (t_out <= t_in) {
            note = "declared neighborhood not reached by grid";
            return false;
        }
        for (int j = 0; j <= 64; ++j) {
            const double t = t_in * std::pow(t_out / t_in, double(j) / 64.0);
            const double x = side == 0 ? -t : t;
            const double h = spec.h(x);
            const double lo = eb.c1 * std::pow(t, 2.0 * eb.alpha - 2.0);
            const double hi = eb.c2 * std::pow(t, eb.alpha);
            if (h < lo * (1.0 - slack) || h > hi * (1.0 + slack)) {
                os << "sandwich fails at x=" << x << " (h=" << h << ", lo=" << lo
                   << ", hi=" << hi << ")";
                note = os.str();
                return false;
            }
        }
        return true;
    }
    const double w_hi = eb.neighborhood;
    const double w_lo = eb.edge ? (side == 0 ? grid.edge_w.front() : grid.edge_w.back())
                                : 1e-6 * w_hi;
    for (int j = 0; j <= 64; ++j) {
        const double w = w_hi * std::pow(w_lo / w_hi, double(j) / 64.0);
        const double h = eb.edge ? eb.edge->h_of_w(w)
                                 : spec.h(side == 0 ? spec.a + w : spec.b - w);
        const double pat = std::pow(w, eb.alpha);
        if (h < eb.c1 * pat * (1.0 - slack) || h > eb.c2 * pat * (1.0 + slack)) {
            os << "sandwich fails at w=" << w << " (h=" << h << ")";
            note = os.str();
            return false;
        }
    }
    return true;
}

} // namespace

AssumptionReport check_assumptions(const DiffusionSpec& spec, const Grid& grid) {
    AssumptionReport rep;

    // Assumption 3: h > 0 at every interior node.
    rep.positivity_ok = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double h = std::isnan(grid.edge_w[i])
                             ? spec.h(grid.x[i])
                             : (grid.x[i] < 0.0 ? spec.left : spec.right)
                                   .edge->h_of_w(grid.edge_w[i]);
        if (!(h > 0.0)) {
            rep.positivity_ok = false;
            rep.details.push_back("h <= 0 at x=" + std::to_string(grid.x[i]));
            break;
        }
    }

    // Ellipticity: inf h over an expanding truncation ladder; keep it only if
    // the running inf stabilizes above threshold.
    {
        double prev = inf_h_truncated(spec, grid, 1.0);
        bool stable = true;
        double cur = prev;
        for (double extend : {2.0, 4.0}) {
            cur = inf_h_truncated(spec, grid, extend);
            if (std::fabs(cur - prev) > 1e-9 * std::max(1.0, std::fabs(cur))) stable = false;
            prev = cur;
        }
        if (stable && cur > 1e-8) {
            rep.ellipticity_kappa = spec.kappa_analytic.value_or(cur);
            rep.details.push_back("kappa stabilized at " + std::to_string(cur));
        } else {
            rep.details.push_back("no ellipticity constant (inf h not stabilized)");
        }
    }

    std::string note_a, note_b;
    rep.growth_ok_at_a = growth_ok(spec, grid, 0, note_a);
    rep.growth_ok_at_b = growth_ok(spec, grid, 1, note_b);
    if (!note_a.empty()) rep.details.push_back("a: " + note_a);
    if (!note_b.empty()) rep.details.push_back("b: " + note_b);

    auto side_ok = [](const EndpointBehavior& eb, bool growth) {
        if (!growth) return false;
        if (!eb.finite) return eb.alpha <= 2.0;
        return eb.alpha >= 1.0 && eb.alpha <= 2.0;
    };
    rep.ch_finite_expected =
        side_ok(spec.left, rep.growth_ok_at_a) && side_ok(spec.right, rep.growth_ok_at_b);
    return rep;
}

} // namespace qstab
