#include "qstab/stein.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qstab/interp.hpp"
#include "qstab/quadrature.hpp"

namespace qstab {

namespace {

double grid_sup_abs(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::fabs(x));
    return s;
}

// ||f - mu f||_inf from the declared range when available (an upper envelope
// of the true norm, the safe side for the theorem bounds), else the grid sup.
double sup_norm_of(const Target& t, double mu_f, const std::vector<double>& g_nodes) {
    if (t.bounded) return std::max(t.f_sup - mu_f, mu_f - t.f_inf);
    return grid_sup_abs(g_nodes);
}

bool panel_is_edge(const Grid& g, std::size_t p, int& dir) {
    if (!std::isnan(g.edge_w[p]) && !std::isnan(g.edge_w[p + 1])) {
        dir = g.x[p] < 0.0 ? -1 : +1;
        return true;
    }
    return false;
}

} // namespace

SteinWorkspace make_stein_workspace(const QuotientMeasure& m) {
    SteinWorkspace ws;
    ws.m = &m;
    const Grid& g = m.grid;
    const std::size_t np = g.size() - 1;
    ws.x_mid.resize(np);
    ws.v_mid.resize(np);
    ws.h_mid.resize(np);
    ws.half_begin.assign(np + 1, 0);

    struct HalfPts {
        std::vector<double> x, w;
        double x_mid = 0.0, v_mid = 0.0, h_mid = 0.0;
    };
    std::vector<HalfPts> halves(np);
    parallel_for(np, [&](std::size_t p) {
        HalfPts hp;
        int dir = 0;
        if (panel_is_edge(g, p, dir)) {
            const EndpointBehavior& eb = dir < 0 ? m.spec.left : m.spec.right;
            const double edge = dir < 0 ? m.spec.a : m.spec.b;
            const double w_out = dir < 0 ? g.edge_w[p + 1] : g.edge_w[p];
            const double phi_out = dir < 0 ? g.phi[p + 1] : g.phi[p];
            const double w_mid = 0.5 * (g.edge_w[p] + g.edge_w[p + 1]);
            hp.x_mid = edge - dir * w_mid;
            hp.v_mid =
                std::exp(-(phi_out + edge_phi_increment(m.spec, dir, w_mid, w_out, m.tol)));
            hp.h_mid = eb.edge->h_of_w(w_mid);
            // left half of the panel in x; in w that is [w_mid, w_p] on the
            // right side and [w_p, w_mid] on the left side
            const double wa = dir < 0 ? g.edge_w[p] : w_mid;
            const double wb = dir < 0 ? w_mid : g.edge_w[p];
            const double w_ref = g.edge_w[p];
            const double c = 0.5 * (wa + wb), half = 0.5 * (wb - wa);
            for (int i = 0; i < 15; ++i) {
                const double w = c + half * GK15::nodes[i];
                const double inc = edge_phi_increment(m.spec, dir, std::min(w, w_ref),
                                                      std::max(w, w_ref), m.tol);
                const double phi = g.phi[p] + (w <= w_ref ? inc : -inc);
                hp.x.push_back(edge - dir * w);
                hp.w.push_back(half * GK15::wk[i] * std::exp(-phi) / eb.edge->h_of_w(w));
            }
        } else {
            const double x0 = g.x[p], x1 = g.x[p + 1];
            hp.x_mid = 0.5 * (x0 + x1);
            hp.v_mid = std::exp(-(g.phi[p] + phi_increment(m.spec, x0, hp.x_mid, m.tol)));
            hp.h_mid = m.spec.h(hp.x_mid);
            const double c = 0.5 * (x0 + hp.x_mid), half = 0.5 * (hp.x_mid - x0);
            for (int i = 0; i < 15; ++i) {
                const double x = c + half * GK15::nodes[i];
                const double v = std::exp(-(g.phi[p] + phi_increment(m.spec, x0, x, m.tol)));
                hp.x.push_back(x);
                hp.w.push_back(half * GK15::wk[i] * v / m.spec.h(x));
            }
        }
        halves[p] = std::move(hp);
    });
    for (std::size_t p = 0; p < np; ++p) {
        ws.x_mid[p] = halves[p].x_mid;
        ws.v_mid[p] = halves[p].v_mid;
        ws.h_mid[p] = halves[p].h_mid;
        ws.half_begin[p] = ws.half_x.size();
        ws.half_x.insert(ws.half_x.end(), halves[p].x.begin(), halves[p].x.end());
        ws.half_w.insert(ws.half_w.end(), halves[p].w.begin(), halves[p].w.end());
    }
    ws.half_begin[np] = ws.half_x.size();
    return ws;
}

SteinSolution solve_stein(const SteinWorkspace& ws, const Target& target) {
    const QuotientMeasure& m = *ws.m;
    const QuadTable& t = m.table;
    const Grid& g = m.grid;
    const std::size_t nn = g.size();

    SteinSolution sol;
    sol.target = target;

    // mu*(f) from the same table, so sum g w vanishes to rounding and the two
    // representations are consistent by construction.
    std::vector<double> fx(t.size());
    parallel_for(t.size(), [&](std::size_t k) { fx[k] = target.f(t.x[k]); });
    double fw = 0.0, wsum = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        fw += fx[k] * t.weight[k];
        wsum += t.weight[k];
    }
    sol.mu_f = fw / wsum;

    // Z int_a^x g dmu* and Z int_x^b g dmu* as prefix masses from each end.
    std::vector<double> S(nn), Sbar(nn);
    {
        double acc = 0.0;
        std::size_t k = 0;
        for (std::size_t i = 0; i < nn; ++i) {
            for (; k < t.panel_begin[i]; ++k) acc += (fx[k] - sol.mu_f) * t.weight[k];
            S[i] = acc;
        }
        acc = 0.0;
        std::size_t kk = t.size();
        for (std::size_t i = nn; i-- > 0;) {
            for (; kk > t.panel_begin[i]; --kk)
                acc += (fx[kk - 1] - sol.mu_f) * t.weight[kk - 1];
            Sbar[i] = acc;
        }
    }

    std::vector<double> g_nodes(nn);
    sol.psi.resize(nn);
    sol.psi_prime.resize(nn);
    double cross = 0.0;
    for (std::size_t i = 0; i < nn; ++i) {
        const double v = m.v_nodes[i];
        const double left = S[i] / v, right = -Sbar[i] / v;
        sol.psi[i] = g.x[i] <= 0.0 ? left : right;
        // compare the representations where both tail integrals are O(1);
        // right at a vanishing endpoint both sides lose all digits by design
        if (std::fabs(g.x[i]) <= 1.0 && v >= 0.04)
            cross = std::max(cross, std::fabs(left - right));
        g_nodes[i] = target.f(g.x[i]) - sol.mu_f;
        sol.psi_prime[i] =
            (g_nodes[i] + m.spec.lambda_mu * g.x[i] * sol.psi[i]) / m.h_at_node(i);
    }
    sol.cross_agreement = cross;
    sol.sup_norm = sup_norm_of(target, sol.mu_f, g_nodes);

    // Simpson consistency defect per panel, stated in equation units.
    double resid = 0.0;
    for (std::size_t p = 0; p + 1 < nn; ++p) {
        bool kinked = false;
        for (double kx : target.kinks)
            if (kx >= g.x[p] && kx <= g.x[p + 1]) kinked = true;
        if (kinked) continue;
        double half_g = 0.0;
        for (std::size_t k = ws.half_begin[p]; k < ws.half_begin[p + 1]; ++k)
            half_g += (target.f(ws.half_x[k]) - sol.mu_f) * ws.half_w[k];
        const double panel_g = S[p + 1] - S[p];
        const double psi_mid = ws.x_mid[p] <= 0.0
                                   ? (S[p] + half_g) / ws.v_mid[p]
                                   : -(Sbar[p + 1] + (panel_g - half_g)) / ws.v_mid[p];
        const double g_mid = target.f(ws.x_mid[p]) - sol.mu_f;
        const double dpsi_mid =
            (g_mid + m.spec.lambda_mu * ws.x_mid[p] * psi_mid) / ws.h_mid[p];
        const double dx = g.x[p + 1] - g.x[p];
        const double simpson =
            (dx / 6.0) * (sol.psi_prime[p] + 4.0 * dpsi_mid + sol.psi_prime[p + 1]);
        const double defect =
            ws.h_mid[p] * std::fabs(sol.psi[p + 1] - sol.psi[p] - simpson) / dx;
        resid = std::max(resid, defect);
    }
    sol.residual_max = resid;

    if (sol.cross_agreement > m.tol.representation_agree * (1.0 + sol.sup_norm))
        throw numerical_failure("solve_stein: representations disagree by " +
                                std::to_string(sol.cross_agreement));
    return sol;
}

SteinSolution solve_stein(const QuotientMeasure& m, const Target& target) {
    SteinWorkspace ws = make_stein_workspace(m);
    return solve_stein(ws, target);
}

SteinSolution rewrite_lipschitz(const SteinWorkspace& ws, const Target& target) {
    if (!target.f_prime)
        throw invalid_parameter("rewrite_lipschitz: target has no derivative");
    const QuotientMeasure& m = *ws.m;
    const QuadTable& t = m.table;
    const Grid& g = m.grid;
    const std::size_t nn = g.size();

    // A(x) = int_a^x f' q dt and B(x) = int_x^b f'(1-q) dt through their
    // integrated-by-parts forms A = f q - int_a^x f dmu*, B = int_x^b f dmu*
    // - f (1-q): prefix masses stay relatively accurate in the tails where
    // the 1/v amplification makes the raw quadrature useless.
    std::vector<double> fx(t.size());
    parallel_for(t.size(), [&](std::size_t k) { fx[k] = target.f(t.x[k]); });
    std::vector<double> A(nn, 0.0), B(nn, 0.0);
    {
        double acc = 0.0;
        std::size_t k = 0;
        for (std::size_t i = 0; i < nn; ++i) {
            for (; k < t.panel_begin[i]; ++k) acc += fx[k] * t.weight[k];
            A[i] = target.f(g.x[i]) * m.cdf[i] - acc / m.Z;
        }
        acc = 0.0;
        std::size_t kk = t.size();
        for (std::size_t i = nn; i-- > 0;) {
            for (; kk > t.panel_begin[i]; --kk) acc += fx[kk - 1] * t.weight[kk - 1];
            B[i] = acc / m.Z - target.f(g.x[i]) * m.ccdf[i];
        }
    }

    SteinSolution sol;
    sol.target = target;
    {
        double fw = 0.0, wsum = 0.0;
        for (std::size_t k = 0; k < t.size(); ++k) {
            fw += target.f(t.x[k]) * t.weight[k];
            wsum += t.weight[k];
        }
        sol.mu_f = fw / wsum;
    }
    sol.psi.resize(nn);
    sol.psi_prime.resize(nn);
    std::vector<double> g_nodes(nn);
    const double lam = m.spec.lambda_mu;
    double resid = 0.0;
    for (std::size_t i = 0; i < nn; ++i) {
        const double v = m.v_nodes[i], x = g.x[i];
        const double q = m.cdf[i], cq = m.ccdf[i];
        sol.psi[i] = -m.Z * cq / v * A[i] - m.Z * q / v * B[i];
        const double P1 = 1.0 - m.Z * lam * x * cq / v;
        const double P2 = 1.0 + m.Z * lam * x * q / v;
        const double hpsi = P1 * A[i] - P2 * B[i];
        sol.psi_prime[i] = hpsi / m.h_at_node(i);
        g_nodes[i] = target.f(x) - sol.mu_f;
        resid = std::max(resid, std::fabs(hpsi - lam * x * sol.psi[i] - g_nodes[i]));
    }
    sol.sup_norm = sup_norm_of(target, sol.mu_f, g_nodes);
    sol.residual_max = resid;
    sol.cross_agreement = 0.0;
    return sol;
}

BoundReport check_sup_bounds(const QuotientMeasure& m, const SteinSolution& sol) {
    if (!sol.target.bounded)
        throw invalid_parameter("check_sup_bounds: target has no declared range");
    BoundReport rep;
    const double norm = sol.sup_norm;
    const double q0 = m.cdf[m.center_index], cq0 = m.ccdf[m.center_index];
    const double cap_psi = m.Z * std::max(q0, cq0) * norm;
    const double cap_xpsi = m.spec.c_p() * norm;
    double tight = kInf;
    std::size_t bad = 0;
    for (std::size_t i = 0; i < m.grid.size(); ++i) {
        const double p1 = std::fabs(sol.psi[i]);
        const double p2 = std::fabs(m.grid.x[i] * sol.psi[i]);
        tight = std::min(tight,
                         std::min((cap_psi - p1) / cap_psi, (cap_xpsi - p2) / cap_xpsi));
        if (p1 > cap_psi * (1.0 + m.tol.invariant_slack) ||
            p2 > cap_xpsi * (1.0 + m.tol.invariant_slack))
            ++bad;
        ++rep.checked;
    }
    rep.tightest_rel_slack = tight;
    rep.ok = bad == 0;
    rep.detail = rep.ok ? "both sup bounds hold" : std::to_string(bad) + " violations";
    if (!rep.ok) throw invariant_violation("check_sup_bounds: " + rep.detail);
    return rep;
}

BoundReport check_elliptic_bounds(const QuotientMeasure& m, const SteinSolution& sol,
                                  double kappa) {
    if (!(kappa > 0.0)) throw invalid_parameter("check_elliptic_bounds: kappa <= 0");
    if (!sol.target.bounded)
        throw invalid_parameter("check_elliptic_bounds: target has no declared range");
    BoundReport rep;
    const double norm = sol.sup_norm;
    const double cap_d = 2.0 / kappa * norm;
    const double cap_hd2 = 4.0 / kappa * norm * norm;
    double tight = kInf;
    std::size_t bad = 0;
    for (std::size_t i = 0; i < m.grid.size(); ++i) {
        const double d = std::fabs(sol.psi_prime[i]);
        const double hd2 = m.h_at_node(i) * d * d;
        tight = std::min(tight, std::min((cap_d - d) / cap_d, (cap_hd2 - hd2) / cap_hd2));
        if (d > cap_d * (1.0 + m.tol.invariant_slack) ||
            hd2 > cap_hd2 * (1.0 + m.tol.invariant_slack))
            ++bad;
        ++rep.checked;
    }
    rep.tightest_rel_slack = tight;
    rep.ok = bad == 0;
    rep.detail = rep.ok ? "elliptic bounds hold" : std::to_string(bad) + " violations";
    if (!rep.ok) throw invariant_violation("check_elliptic_bounds: " + rep.detail);
    return rep;
}

namespace {

ChBreakdown ch_profile(const QuotientMeasure& m) {
    ChBreakdown ch;
    const std::size_t nn = m.grid.size();
    ch.a1.resize(nn);
    ch.a2.resize(nn);
    ch.sqrt_gamma_a1.resize(nn);
    ch.sqrt_gamma_a2.resize(nn);
    ch.left_integral.resize(nn);
    ch.right_integral.resize(nn);
    ch.objective.resize(nn);
    const double lam = m.spec.lambda_mu;
    const double cpz = m.spec.c_p() / m.Z;
    double sup = 0.0;
    for (std::size_t i = 0; i < nn; ++i) {
        const double x = m.grid.x[i], v = m.v_nodes[i];
        const double q = m.cdf[i], cq = m.ccdf[i];
        const double h = m.h_at_node(i);
        ch.a1[i] = m.Z * cq / v;
        ch.a2[i] = m.Z * q / v;
        // int_a^x q dt = x q + (C_P/Z) v and int_x^b (1-q) dt = (C_P/Z) v - x(1-q);
        // the two terms cancel to high order at the ends, so they stay fused.
        ch.left_integral[i] = std::max(0.0, x * q + cpz * v);
        ch.right_integral[i] = std::max(0.0, cpz * v - x * cq);
        const double P1 = std::max(0.0, 1.0 - m.Z * lam * x * cq / v);
        const double P2 = std::max(0.0, 1.0 + m.Z * lam * x * q / v);
        ch.sqrt_gamma_a1[i] = P1 / std::sqrt(h);
        ch.sqrt_gamma_a2[i] = P2 / std::sqrt(h);
        ch.objective[i] = ch.sqrt_gamma_a1[i] * ch.left_integral[i] +
                          ch.sqrt_gamma_a2[i] * ch.right_integral[i];
        sup = std::max(sup, ch.objective[i]);
    }
    ch.c_h = sup;
    return ch;
}

} // namespace

ChBreakdown compute_ch(const QuotientMeasure& m, const ChOptions& opt) {
    ChBreakdown ch = ch_profile(m);
    ch.extension_sups = {ch.c_h};
    if (opt.check_extension) {
        double prev = ch.c_h;
        int growing = 0;
        for (double factor : {2.0, 4.0, 8.0}) {
            MeasureBuildOptions mo;
            mo.n = std::max<std::size_t>(m.grid.size() - 1, 64);
            mo.phi_cut = m.grid.phi_cut * factor;
            mo.check_moments = false;
            mo.mode = opt.mode;
            QuotientMeasure ext = build_measure(m.spec, mo, m.tol);
            const double sup = ch_profile(ext).c_h;
            ch.extension_sups.push_back(sup);
            if (sup > prev * (1.0 + m.tol.ch_growth)) ++growing;
            prev = sup;
        }
        ch.finite = growing < 3;
        if (ch.finite) ch.c_h = std::max(ch.c_h, ch.extension_sups.back());
    }
    return ch;
}

BoundReport check_lipschitz_bound(const QuotientMeasure& m, const SteinSolution& sol,
                                  const ChBreakdown& ch) {
    if (!sol.target.lipschitz)
        throw invalid_parameter("check_lipschitz_bound: target has no Lipschitz bound");
    if (!ch.finite) throw invalid_parameter("check_lipschitz_bound: C_h not finite");
    BoundReport rep;
    const double cap = ch.c_h * sol.target.lip;
    double tight = kInf;
    std::size_t bad = 0;
    for (std::size_t i = 0; i < m.grid.size(); ++i) {
        const double lhs = std::sqrt(m.h_at_node(i)) * std::fabs(sol.psi_prime[i]);
        tight = std::min(tight, (cap - lhs) / std::max(cap, 1e-300));
        if (lhs > cap * (1.0 + m.tol.invariant_slack) + 1e-14) ++bad;
        ++rep.checked;
    }
    rep.tightest_rel_slack = tight;
    rep.ok = bad == 0;
    rep.detail = rep.ok ? "lipschitz bound holds" : std::to_string(bad) + " violations";
    if (!rep.ok) throw invariant_violation("check_lipschitz_bound: " + rep.detail);
    return rep;
}

double stein_operator_integral(const QuotientMeasure& m, const SteinSolution& sol) {
    // psi between nodes via Hermite with the solution's own slopes; the
    // cubic's derivative (not the ODE) supplies psi' so the check stays
    // independent of the defining relation.
    HermiteSeries psi(m.grid.x, sol.psi, sol.psi_prime);
    const double lam = m.spec.lambda_mu;
    const QuadTable& t = m.table;
    double acc = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k)
        acc += (t.h[k] * psi.derivative(t.x[k]) - lam * t.x[k] * psi(t.x[k])) * t.weight[k];
    return acc / m.Z;
}

void dump_ch_columns(const QuotientMeasure& m, const ChBreakdown& ch, std::ostream& os) {
    os << "node\ta1\ta2\tsqrt_gamma_a1\tsqrt_gamma_a2\tobjective\n";
    os.precision(17);
    for (std::size_t i = 0; i < m.grid.size(); ++i)
        os << m.grid.x[i] << '\t' << ch.a1[i] << '\t' << ch.a2[i] << '\t'
           << ch.sqrt_gamma_a1[i] << '\t' << ch.sqrt_gamma_a2[i] << '\t'
           << ch.objective[i] << '\n';
}

} // namespace qstab
