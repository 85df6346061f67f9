#include "qstab/grid.hpp"

#include <algorithm>
#include <cmath>

#include "qstab/quadrature.hpp"
#include "qstab/rootfind.hpp"

namespace qstab {

namespace {

struct Side {
    int dir = +1;            // -1: toward a, +1: toward b
    double endpoint = kInf;  // signed endpoint (a or b)
    bool edge_linear = false;
    const EndpointBehavior* eb = nullptr;
    double scale = 1.0;
};

Side make_side(const DiffusionSpec& spec, int dir) {
    Side s;
    s.dir = dir;
    s.endpoint = dir < 0 ? spec.a : spec.b;
    s.eb = dir < 0 ? &spec.left : &spec.right;
    s.edge_linear = s.eb->finite && s.eb->alpha == 1.0;
    if (s.edge_linear && !s.eb->edge)
        throw invalid_parameter("linear-vanishing finite end needs an EdgeModel");
    if (s.eb->finite && s.eb->alpha < 1.0)
        throw invalid_parameter("finite ends with alpha < 1 are not supported");
    s.scale = std::isfinite(s.endpoint) ? std::max(1.0, std::fabs(s.endpoint)) : 1.0;
    return s;
}

// d(Phi)/dx away from edges.
double phi_rate(const DiffusionSpec& spec, double x) {
    return spec.lambda_mu * x / spec.h(x);
}

// Single-panel Kronrod estimate of lambda int_{x0}^{x1} u/h du. Panels are
// narrow by construction so no adaptivity is needed here.
double phi_inc_fast(const DiffusionSpec& spec, double x0, double x1) {
    PanelEstimate e = gk15_panel(
        [&spec](double u) { return spec.lambda_mu * u / spec.h(u); }, x0, x1);
    return e.value;
}

double phi_inc_x(const DiffusionSpec& spec, double x0, double x1, const Tolerances& tol) {
    QuadOptions opt;
    opt.abs_tol = 1e-14;
    opt.rel_tol = tol.phi_rel;
    opt.max_depth = tol.quad_max_depth;
    return integrate_checked(
        [&spec](double u) { return spec.lambda_mu * u / spec.h(u); }, x0, x1, opt);
}

// |dPhi/dw| minus its gamma_c/w pole; regular down to w = 0 but evaluated
// with a floor because the difference cancels catastrophically for tiny w.
double edge_rate_residual(const DiffusionSpec& spec, const Side& s, double w) {
    const EdgeModel& em = *s.eb->edge;
    const double x = s.endpoint - s.dir * w;
    const double rate = spec.lambda_mu * s.dir * x / em.h_of_w(w); // = |dPhi/dw| > 0
    return rate - em.gamma_c / w;
}

// Phi(w_lo) - Phi(w_hi) for 0 < w_lo < w_hi inside the edge zone.
double edge_phi_inc(const DiffusionSpec& spec, const Side& s, double w_lo, double w_hi,
                    const Tolerances& tol) {
    if (w_lo >= w_hi) return w_lo == w_hi ? 0.0 : -edge_phi_inc(spec, s, w_hi, w_lo, tol);
    const EdgeModel& em = *s.eb->edge;
    const double w_floor = 1e-7 * s.scale;
    double res = em.gamma_c * std::log(w_hi / w_lo);
    QuadOptions opt;
    opt.abs_tol = 1e-14;
    opt.rel_tol = tol.phi_rel;
    auto r = [&spec, &s](double w) { return edge_rate_residual(spec, s, w); };
    if (w_lo >= w_floor) {
        res += integrate_checked(r, w_lo, w_hi, opt);
    } else {
        const double cut = std::min(w_floor, w_hi);
        res += r(cut) * (cut - w_lo); // residual is regular; rectangle is enough here
        if (w_hi > w_floor) res += integrate_checked(r, w_floor, w_hi, opt);
    }
    return res;
}

// Width of the edge zone: everything from the Phi = phi_central point inward.
double edge_zone_w(const Side& s, double x_central) {
    return std::fabs(s.endpoint - x_central);
}

} // namespace

double edge_phi_increment(const DiffusionSpec& spec, int side_dir, double w_lo,
                          double w_hi, const Tolerances& tol) {
    Side s = make_side(spec, side_dir);
    if (!s.edge_linear)
        throw invalid_parameter("edge_phi_increment: side has no linear edge model");
    return edge_phi_inc(spec, s, w_lo, w_hi, tol);
}

double phi_increment(const DiffusionSpec& spec, double x0, double x1,
                     const Tolerances& tol) {
    if (x0 == x1) return 0.0;
    if (x1 < x0) return -phi_increment(spec, x1, x0, tol);
    double total = 0.0;
    double lo = x0, hi = x1;
    // Peel off pieces that sit inside a linear edge zone; there the exact
    // w-space form replaces x-space quadrature.
    Side left = make_side(spec, -1), right = make_side(spec, +1);
    const double span = (std::isfinite(spec.a) && std::isfinite(spec.b))
                            ? (spec.b - spec.a)
                            : 2.0 * std::max(left.scale, right.scale);
    const double wz = 0.05 * span;
    if (left.edge_linear) {
        const double xz = spec.a + wz;
        if (lo < xz) {
            const double upto = std::min(hi, xz);
            // moving right near the left edge decreases Phi
            total -= edge_phi_inc(spec, left, lo - spec.a, upto - spec.a, tol);
            lo = upto;
        }
    }
    if (right.edge_linear && hi > lo) {
        const double xz = spec.b - wz;
        if (hi > xz) {
            const double from = std::max(lo, xz);
            total += edge_phi_inc(spec, right, spec.b - hi, spec.b - from, tol);
            hi = from;
        }
    }
    if (hi > lo) total += phi_inc_x(spec, lo, hi, tol);
    return total;
}

namespace {

// Solve Phi(x) = level on one side by outward marching. Returns x and the
// accurate Phi there via the cumulated increments.
double solve_phi_level(const DiffusionSpec& spec, const Side& s, double x_from,
                       double phi_from, double level) {
    double x = x_from;
    double phi = phi_from;
    double step = 0.25 * (std::isfinite(s.endpoint) ? std::fabs(s.endpoint - x_from) : 1.0);
    if (step == 0.0) step = 0.25;
    for (int it = 0; it < 2000; ++it) {
        double next = x + s.dir * step;
        if (std::isfinite(s.endpoint)) {
            const double limit = s.endpoint - s.dir * 1e-13 * s.scale;
            if ((s.dir > 0 && next > limit) || (s.dir < 0 && next < limit)) {
                next = x + 0.5 * (limit - x);
                step = std::fabs(next - x);
            }
        }
        const double dphi = phi_inc_fast(spec, x, next);
        if (phi + dphi >= level) {
            // refine inside [x, next]
            double lo = 0.0, hi = 1.0; // parameterize linearly
            auto f = [&](double tpar) {
                return phi + phi_inc_fast(spec, x, x + tpar * (next - x));
            };
            for (int k = 0; k < 60; ++k) {
                const double mid = 0.5 * (lo + hi);
                if (f(mid) < level)
                    lo = mid;
                else
                    hi = mid;
            }
            return x + 0.5 * (lo + hi) * (next - x);
        }
        phi += dphi;
        x = next;
        if (!std::isfinite(s.endpoint)) step *= 2.0;
    }
    throw numerical_failure("solve_phi_level: level not reached");
}

} // namespace

Grid build_grid(const DiffusionSpec& spec, const GridBuildOptions& opt,
                const Tolerances& tol) {
    if (!(spec.a < 0.0 && spec.b > 0.0))
        throw invalid_parameter("build_grid: interval must satisfy a < 0 < b");
    if (!(spec.h(0.0) > 0.0)) throw invalid_parameter("build_grid: h(0) <= 0");
    const std::size_t n = std::max<std::size_t>(opt.n, 64);

    Side sides[2] = {make_side(spec, -1), make_side(spec, +1)};
    const std::size_t n_central_half = std::max<std::size_t>(n / 4, 8);
    const std::size_t n_tail = std::max<std::size_t>(n / 4, 8);

    // Central zone split points (Phi = phi_central on each side).
    double xc[2];
    for (int k = 0; k < 2; ++k)
        xc[k] = solve_phi_level(spec, sides[k], 0.0, 0.0, opt.phi_central);

    struct NodeW {
        double x;
        double w = kNaN;
    };
    std::vector<NodeW> nodes;
    nodes.reserve(n + 16);

    // Outer zone on one side: geometric-in-w ladder at a linear edge, or a
    // march at (approximately) uniform Phi levels toward the truncation point.
    auto outer_nodes = [&](int k) {
        const Side& s = sides[k];
        std::vector<NodeW> out;
        if (s.edge_linear) {
            const double w_c = edge_zone_w(s, xc[k]);
            const EdgeModel& em = *s.eb->edge;
            double w_min = std::max(opt.edge_w_floor_scale * s.scale,
                                    w_c * std::exp(-(opt.phi_cut - opt.phi_central) /
                                                   em.gamma_c));
            w_min = std::min(w_min, 0.25 * w_c);
            const double lr = std::log(w_min / w_c) / double(n_tail);
            for (std::size_t j = 1; j <= n_tail; ++j) {
                NodeW nw;
                nw.w = w_c * std::exp(lr * double(j));
                nw.x = s.endpoint - s.dir * nw.w;
                out.push_back(nw);
            }
            return out;
        }
        const double x_T =
            solve_phi_level(spec, s, xc[k], opt.phi_central, opt.phi_cut);
        const double dphi = (opt.phi_cut - opt.phi_central) / double(n_tail);
        double x = xc[k];
        for (std::size_t j = 1; j < n_tail; ++j) {
            // rate-based predictor, one Kronrod corrector
            double rate = std::fabs(phi_rate(spec, x));
            double guess = x + s.dir * dphi / std::max(rate, 1e-12);
            if ((s.dir > 0 && guess >= x_T) || (s.dir < 0 && guess <= x_T))
                guess = x + 0.5 * (x_T - x);
            const double got = std::fabs(phi_inc_fast(spec, x, guess));
            rate = std::fabs(phi_rate(spec, guess));
            if (got > 0.0 && rate > 0.0) {
                double corr = guess + s.dir * (dphi - got) / rate;
                if ((s.dir > 0 && corr > x && corr < x_T) ||
                    (s.dir < 0 && corr < x && corr > x_T))
                    guess = corr;
            }
            x = guess;
            out.push_back({x, kNaN});
        }
        out.push_back({x_T, kNaN});
        return out;
    };

    for (const NodeW& nw : outer_nodes(0)) nodes.push_back(nw);
    // Central zone; x = 0 is always a node.
    for (std::size_t j = 0; j <= n_central_half; ++j)
        nodes.push_back({xc[0] + (0.0 - xc[0]) * double(j) / double(n_central_half), kNaN});
    for (std::size_t j = 1; j <= n_central_half; ++j)
        nodes.push_back({xc[1] * double(j) / double(n_central_half), kNaN});
    for (const NodeW& nw : outer_nodes(1)) nodes.push_back(nw);

    // Dedupe / enforce strict monotonicity.
    std::sort(nodes.begin(), nodes.end(),
              [](const NodeW& l, const NodeW& r) { return l.x < r.x; });
    Grid g;
    g.phi_cut = opt.phi_cut;
    g.left_transform = sides[0].edge_linear ? "power-edge" : "exp-tail";
    g.right_transform = sides[1].edge_linear ? "power-edge" : "exp-tail";
    for (const NodeW& nw : nodes) {
        if (!g.x.empty() && !(nw.x > g.x.back())) continue;
        g.x.push_back(nw.x);
        g.edge_w.push_back(nw.w);
    }

    // Accurate Phi at nodes, cumulated outward from x = 0.
    const std::size_t nn = g.x.size();
    g.phi.assign(nn, 0.0);
    std::size_t i0 = std::lower_bound(g.x.begin(), g.x.end(), 0.0) - g.x.begin();
    if (i0 >= nn || g.x[i0] != 0.0)
        throw numerical_failure("build_grid: node at 0 missing");
    for (std::size_t i = i0; i + 1 < nn; ++i) {
        double inc;
        if (!std::isnan(g.edge_w[i]) && !std::isnan(g.edge_w[i + 1]))
            inc = edge_phi_inc(spec, sides[1], g.edge_w[i + 1], g.edge_w[i], tol);
        else
            inc = phi_increment(spec, g.x[i], g.x[i + 1], tol);
        g.phi[i + 1] = g.phi[i] + inc;
    }
    for (std::size_t i = i0; i-- > 0;) {
        double inc;
        if (!std::isnan(g.edge_w[i]) && !std::isnan(g.edge_w[i + 1]))
            inc = edge_phi_inc(spec, sides[0], g.edge_w[i], g.edge_w[i + 1], tol);
        else
            inc = -phi_increment(spec, g.x[i], g.x[i + 1], tol);
        g.phi[i] = g.phi[i + 1] + inc;
    }
    return g;
}

namespace {

struct TablePoint {
    double x, weight, plain_w, h, v;
};

// Fifteen-point pass over an x-parameterized subpanel. Phi at each point is
// the left-node value plus a local Kronrod increment.
void x_panel_points(const DiffusionSpec& spec, double lo, double hi, double phi_lo,
                    std::vector<TablePoint>& out) {
    const double c = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (int i = 0; i < 15; ++i) {
        TablePoint p;
        p.x = c + half * GK15::nodes[i];
        p.plain_w = half * GK15::wk[i];
        p.h = spec.h(p.x);
        p.v = std::exp(-(phi_lo + phi_inc_fast(spec, lo, p.x)));
        p.weight = p.plain_w * p.v / p.h;
        out.push_back(p);
    }
}

// Mass of a subpanel by a single K15 (value) and its split-in-two refinement
// (error probe).
double x_panel_mass(const DiffusionSpec& spec, double lo, double hi, double phi_lo) {
    PanelEstimate e = gk15_panel(
        [&](double x) { return std::exp(-(phi_lo + phi_inc_fast(spec, lo, x))) / spec.h(x); },
        lo, hi);
    return e.value;
}

void build_x_panel(const DiffusionSpec& spec, double lo, double hi, double phi_lo,
                   double tol_abs, int depth, std::vector<TablePoint>& out) {
    if (depth > 0) {
        const double mid = 0.5 * (lo + hi);
        const double phi_mid = phi_lo + phi_inc_fast(spec, lo, mid);
        const double whole = x_panel_mass(spec, lo, hi, phi_lo);
        const double l = x_panel_mass(spec, lo, mid, phi_lo);
        const double r = x_panel_mass(spec, mid, hi, phi_mid);
        if (std::fabs(whole - (l + r)) >
            std::max(tol_abs, 1e-12 * std::fabs(l + r))) {
            build_x_panel(spec, lo, mid, phi_lo, 0.5 * tol_abs, depth - 1, out);
            build_x_panel(spec, mid, hi, phi_mid, 0.5 * tol_abs, depth - 1, out);
            return;
        }
    }
    x_panel_points(spec, lo, hi, phi_lo, out);
}

// Edge-zone subpanel, parameterized by the edge distance w. `w_hi` is the
// outer (larger) distance where Phi = phi_hi is known.
void w_panel_points(const DiffusionSpec& spec, const Side& s, double w_lo, double w_hi,
                    double phi_hi, const Tolerances& tol, std::vector<TablePoint>& out) {
    const EdgeModel& em = *s.eb->edge;
    const double c = 0.5 * (w_lo + w_hi), half = 0.5 * (w_hi - w_lo);
    std::vector<TablePoint> pts;
    pts.reserve(15);
    for (int i = 0; i < 15; ++i) {
        TablePoint p;
        const double w = c + half * GK15::nodes[i];
        p.x = s.endpoint - s.dir * w;
        p.plain_w = half * GK15::wk[i];
        p.h = em.h_of_w(w);
        p.v = std::exp(-(phi_hi + edge_phi_inc(spec, s, w, w_hi, tol)));
        p.weight = p.plain_w * p.v / p.h;
        pts.push_back(p);
    }
    if (s.dir > 0) std::reverse(pts.begin(), pts.end()); // ascending x
    for (const auto& p : pts) out.push_back(p);
}

} // namespace

QuadTable build_table(const DiffusionSpec& spec, const Grid& grid, const Tolerances& tol,
                      ExecMode mode) {
    const std::size_t nn = grid.size();
    if (nn < 2) throw invalid_parameter("build_table: need >= 2 nodes");
    const std::size_t npanels = nn - 1;
    Side sides[2] = {make_side(spec, -1), make_side(spec, +1)};

    std::vector<std::vector<TablePoint>> panels(npanels);
    const double panel_tol = 1e-15; // plus per-panel relative control inside
    parallel_for(
        npanels,
        [&](std::size_t p) {
            auto& out = panels[p];
            const bool left_w = !std::isnan(grid.edge_w[p]) && !std::isnan(grid.edge_w[p + 1]) &&
                                grid.x[p] < 0.0;
            const bool right_w = !std::isnan(grid.edge_w[p]) && !std::isnan(grid.edge_w[p + 1]) &&
                                 grid.x[p] > 0.0;
            if (right_w) {
                w_panel_points(spec, sides[1], grid.edge_w[p + 1], grid.edge_w[p],
                               grid.phi[p], tol, out);
            } else if (left_w) {
                w_panel_points(spec, sides[0], grid.edge_w[p], grid.edge_w[p + 1],
                               grid.phi[p + 1], tol, out);
            } else {
                build_x_panel(spec, grid.x[p], grid.x[p + 1], grid.phi[p], panel_tol, 6, out);
            }
        },
        mode);

    // Left closure: either tail-completion panels beyond the first node, or
    // the power-substituted sliver between the edge and the innermost node.
    std::vector<TablePoint> left_sliver, right_sliver;
    auto add_sliver = [&](const Side& s, double w_min, double phi_min,
                          std::vector<TablePoint>& out) {
        const EdgeModel& em = *s.eb->edge;
        const double gc = em.gamma_c;
        const double u_max = std::pow(w_min, gc);
        // d(mass) = (v/h) dw = (v/h) (1/gc) u^{1/gc - 1} du, regular at u = 0.
        QuadOptions opt;
        opt.abs_tol = 1e-15;
        opt.rel_tol = 1e-12;
        struct Rec {
            double u, wgt;
        };
        std::vector<Rec> recs;
        // fixed subdivision: geometric panels in u, each a single K15
        const int nsub = 24;
        double hi = u_max;
        for (int k2 = 0; k2 < nsub; ++k2) {
            const double lo = (k2 + 1 == nsub) ? 0.0 : hi * 0.25;
            const double c = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
            for (int i = 0; i < 15; ++i)
                recs.push_back({c + half * GK15::nodes[i], half * GK15::wk[i]});
            hi = lo;
            if (hi == 0.0) break;
        }
        for (const Rec& rc : recs) {
            const double w = std::pow(rc.u, 1.0 / gc);
            TablePoint p;
            p.x = s.endpoint - s.dir * w;
            p.h = em.h_of_w(w);
            const double dwdu = (1.0 / gc) * std::pow(rc.u, 1.0 / gc - 1.0);
            p.plain_w = rc.wgt * dwdu;
            p.v = std::exp(-(phi_min + edge_phi_inc(spec, s, w, w_min, tol)));
            // fuse v/h * dw/du to dodge under/overflow in the factors
            const double vh = p.v / p.h;
            p.weight = rc.wgt * vh * dwdu;
            if (!std::isfinite(p.weight)) p.weight = 0.0;
            out.push_back(p);
        }
        std::sort(out.begin(), out.end(),
                  [](const TablePoint& l, const TablePoint& r) { return l.x < r.x; });
    };

    auto add_tail_completion = [&](const Side& s, double x0, double phi0,
                                   std::vector<TablePoint>& out) {
        // continuation panels of doubling width until the running sliver mass
        // stops moving in relative terms; x_in is the inner boundary of the
        // current panel (Phi grows outward)
        double width = 0.5;
        double x_in = x0, phi_in = phi0;
        double total = 0.0;
        for (int k = 0; k < 80; ++k) {
            double next = x_in + s.dir * width;
            if (std::isfinite(s.endpoint)) {
                const double limit = s.endpoint - s.dir * 1e-13 * s.scale;
                if ((s.dir > 0 && next >= limit) || (s.dir < 0 && next <= limit))
                    next = x_in + 0.5 * (limit - x_in);
                if (next == x_in) break;
            }
            const double lo = std::min(x_in, next), hi = std::max(x_in, next);
            const double c = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
            double mass = 0.0;
            for (int i = 0; i < 15; ++i) {
                TablePoint p;
                p.x = c + half * GK15::nodes[i];
                p.plain_w = half * GK15::wk[i];
                p.h = spec.h(p.x);
                const double dphi = std::fabs(phi_inc_fast(spec, std::min(p.x, x_in),
                                                           std::max(p.x, x_in)));
                p.v = std::exp(-(phi_in + dphi));
                p.weight = p.plain_w * p.v / p.h;
                mass += p.weight;
                out.push_back(p);
            }
            phi_in += std::fabs(phi_inc_fast(spec, lo, hi));
            x_in = next;
            width *= 2.0;
            total += mass;
            if (mass < 1e-10 * total || total == 0.0) break;
        }
        std::sort(out.begin(), out.end(),
                  [](const TablePoint& l, const TablePoint& r) { return l.x < r.x; });
    };

    if (sides[0].edge_linear)
        add_sliver(sides[0], grid.edge_w.front(), grid.phi.front(), left_sliver);
    else
        add_tail_completion(sides[0], grid.x.front(), grid.phi.front(), left_sliver);
    if (sides[1].edge_linear)
        add_sliver(sides[1], grid.edge_w.back(), grid.phi.back(), right_sliver);
    else
        add_tail_completion(sides[1], grid.x.back(), grid.phi.back(), right_sliver);

    QuadTable t;
    const std::size_t total = left_sliver.size() + right_sliver.size() +
                              [&] {
                                  std::size_t s = 0;
                                  for (auto& p : panels) s += p.size();
                                  return s;
                              }();
    t.x.reserve(total);
    t.weight.reserve(total);
    t.plain_w.reserve(total);
    t.h.reserve(total);
    t.v.reserve(total);
    auto push = [&t](const TablePoint& p) {
        t.x.push_back(p.x);
        t.weight.push_back(p.weight);
        t.plain_w.push_back(p.plain_w);
        t.h.push_back(p.h);
        t.v.push_back(p.v);
    };
    for (const auto& p : left_sliver) push(p);
    t.panel_begin.resize(npanels + 1);
    for (std::size_t p = 0; p < npanels; ++p) {
        t.panel_begin[p] = t.x.size();
        for (const auto& q : panels[p]) push(q);
    }
    t.panel_begin[npanels] = t.x.size();
    for (const auto& p : right_sliver) push(p);
    return t;
}

} // namespace qstab
