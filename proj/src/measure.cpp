#include "qstab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "qstab/quadrature.hpp"

namespace qstab {

namespace {

// Deterministic chunked reduction over the table: one partial per panel
// (slivers count as pseudo-panels), combined serially in index order.
double table_sum(const QuadTable& t, const std::function<double(std::size_t)>& term,
                 ExecMode mode) {
    const std::size_t np = t.npanels();
    std::vector<double> parts(np + 2, 0.0);
    auto range_sum = [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t k = lo; k < hi; ++k) s += term(k);
        return s;
    };
    parallel_for(
        np,
        [&](std::size_t p) { parts[p + 1] = range_sum(t.panel_begin[p], t.panel_begin[p + 1]); },
        mode);
    parts[0] = range_sum(0, t.panel_begin.front());
    parts[np + 1] = range_sum(t.panel_begin.back(), t.size());
    double s = 0.0;
    for (double p : parts) s += p;
    return s;
}

} // namespace

double QuotientMeasure::h_at_node(std::size_t i) const {
    if (!std::isnan(grid.edge_w[i])) {
        const EndpointBehavior& eb = grid.x[i] < 0.0 ? spec.left : spec.right;
        if (eb.edge) return eb.edge->h_of_w(grid.edge_w[i]);
    }
    return spec.h(grid.x[i]);
}

double QuotientMeasure::integrate(const std::function<double(double)>& f,
                                  ExecMode mode) const {
    return table_sum(table, [&](std::size_t k) { return f(table.x[k]) * table.weight[k]; },
                     mode) /
           Z;
}

double QuotientMeasure::integrate_dx(const std::function<double(double)>& f,
                                     ExecMode mode) const {
    return table_sum(
        table, [&](std::size_t k) { return f(table.x[k]) * table.plain_w[k]; }, mode);
}

double compute_v(const DiffusionSpec& spec, double t, const Tolerances& tol) {
    if (!(t > spec.a && t < spec.b))
        throw invalid_parameter("compute_v: t outside the open interval");
    if (t == 0.0) return 1.0;
    return std::exp(-phi_increment(spec, 0.0, t, tol));
}

QuotientMeasure build_measure(const DiffusionSpec& spec, const MeasureBuildOptions& opt,
                              const Tolerances& tol) {
    if (opt.n < 64) throw invalid_parameter("build_measure: n must be >= 64");
    QuotientMeasure m;
    m.spec = spec;
    m.tol = tol;
    GridBuildOptions gopt;
    gopt.n = opt.n;
    gopt.phi_cut = opt.phi_cut;
    m.grid = build_grid(spec, gopt, tol);
    m.table = build_table(spec, m.grid, tol, opt.mode);

    const std::size_t nn = m.grid.size();
    const QuadTable& t = m.table;

    // Z and moments in one deterministic pass structure.
    m.Z = table_sum(t, [&](std::size_t k) { return t.weight[k]; }, opt.mode);
    if (!(m.Z > 0.0) || !std::isfinite(m.Z))
        throw model_not_normalizable("build_measure: Z did not converge");
    m.m1 = table_sum(t, [&](std::size_t k) { return t.x[k] * t.weight[k]; }, opt.mode) / m.Z;
    m.m2 =
        table_sum(t, [&](std::size_t k) { return sq(t.x[k]) * t.weight[k]; }, opt.mode) / m.Z;
    m.mh = table_sum(t, [&](std::size_t k) { return t.h[k] * t.weight[k]; }, opt.mode) / m.Z;

    // Node values.
    m.v_nodes.resize(nn);
    m.rho_nodes.resize(nn);
    for (std::size_t i = 0; i < nn; ++i) {
        m.v_nodes[i] = std::exp(-m.grid.phi[i]);
        m.rho_nodes[i] = m.v_nodes[i] / (m.Z * m.h_at_node(i));
    }
    {
        auto it = std::lower_bound(m.grid.x.begin(), m.grid.x.end(), 0.0);
        m.center_index = std::size_t(it - m.grid.x.begin());
    }

    // CDF prefix from the left, complement from the right; panel masses are
    // shared so q + qbar == 1 up to rounding.
    const std::size_t np = t.npanels();
    std::vector<double> panel_mass(np + 2, 0.0);
    {
        auto mass = [&](std::size_t lo, std::size_t hi) {
            double s = 0.0;
            for (std::size_t k = lo; k < hi; ++k) s += t.weight[k];
            return s;
        };
        parallel_for(
            np,
            [&](std::size_t p) {
                panel_mass[p + 1] = mass(t.panel_begin[p], t.panel_begin[p + 1]);
            },
            opt.mode);
        panel_mass[0] = mass(0, t.panel_begin.front());
        panel_mass[np + 1] = mass(t.panel_begin.back(), t.size());
    }
    m.cdf.resize(nn);
    m.ccdf.resize(nn);
    {
        double acc = panel_mass[0];
        for (std::size_t i = 0; i < nn; ++i) {
            m.cdf[i] = acc / m.Z;
            if (i < np) acc += panel_mass[i + 1];
        }
        acc = panel_mass[np + 1];
        for (std::size_t i = nn; i-- > 0;) {
            m.ccdf[i] = acc / m.Z;
            if (i > 0) acc += panel_mass[i];
        }
    }

    // Monotone CDF interpolant with the density as exact slope data.
    m.q_spline = Pchip(m.grid.x, m.cdf, m.rho_nodes);

    // Density sup; a linear edge with gamma_c < 1 means rho ~ w^{gamma_c-1}
    // is unbounded.
    m.density_sup = 0.0;
    for (double r : m.rho_nodes) m.density_sup = std::max(m.density_sup, r);
    for (const EndpointBehavior* eb : {&spec.left, &spec.right})
        if (eb->edge && eb->edge->gamma_c < 1.0) m.density_sup = kInf;

    if (spec.closed_form_density) {
        double worst = 0.0;
        for (std::size_t i = 0; i < nn; ++i) {
            double cf;
            if (!std::isnan(m.grid.edge_w[i]) && spec.closed_form_density_edge) {
                cf = spec.closed_form_density_edge(m.grid.x[i] < 0.0 ? -1 : +1,
                                                   m.grid.edge_w[i]);
            } else if (!std::isnan(m.grid.edge_w[i]) &&
                       m.grid.edge_w[i] < 1e-5 * std::max(1.0, std::fabs(m.grid.x[i]))) {
                continue; // oracle itself would cancel here
            } else {
                cf = spec.closed_form_density(m.grid.x[i]);
            }
            if (!(cf > 0.0) || !std::isfinite(cf)) continue;
            worst = std::max(worst, std::fabs(m.rho_nodes[i] - cf) / cf);
        }
        m.closed_form_max_rel_dev = worst;
    }

    const double cdf_defect = std::max(m.cdf.front() < 0 ? kInf : 0.0,
                                       std::fabs(m.cdf.back() + panel_mass[np + 1] / m.Z - 1.0));
    if (cdf_defect > tol.cdf_limit)
        throw invariant_violation("build_measure: cdf does not close to 1");

    if (opt.check_moments) {
        const double tolm = std::max(tol.moment, 1e3 * tol.quad_abs);
        std::ostringstream why;
        if (std::fabs(m.m1) > tolm) why << " m1=" << m.m1;
        if (std::fabs(m.m2 - 1.0) > tolm) why << " m2=" << m.m2;
        if (std::fabs(m.mh - spec.lambda_mu) > tolm * std::max(1.0, spec.lambda_mu))
            why << " mh=" << m.mh << " (lambda=" << spec.lambda_mu << ")";
        if (!why.str().empty())
            throw invariant_violation("build_measure: moment identities failed:" + why.str());
    }
    return m;
}

TailBoundReport verify_tail_bounds(const QuotientMeasure& m) {
    TailBoundReport rep;
    const double cp = m.spec.c_p();
    const double q0 = m.cdf[m.center_index];
    const double cq0 = m.ccdf[m.center_index];
    double worst = kInf;
    std::size_t bad = 0;
    std::string where;
    for (std::size_t i = 0; i < m.grid.size(); ++i) {
        const double x = m.grid.x[i];
        if (x == 0.0) continue;
        double lhs, rhs;
        if (x < 0.0) {
            lhs = m.cdf[i];
            rhs = std::min(q0, -cp / (m.Z * x)) * m.v_nodes[i];
        } else {
            lhs = m.ccdf[i];
            rhs = std::min(cq0, cp / (m.Z * x)) * m.v_nodes[i];
        }
        const double slack = (rhs - lhs) / std::max(rhs, 1e-300);
        if (slack < worst) worst = slack;
        if (lhs > rhs * (1.0 + m.tol.invariant_slack) + 1e-300) {
            ++bad;
            if (where.empty()) where = "first at x=" + std::to_string(x);
        }
        ++rep.checked;
    }
    rep.worst_rel_slack = worst;
    rep.ok = bad == 0;
    rep.detail = rep.ok ? "all nodes ok" : std::to_string(bad) + " violations, " + where;
    if (!rep.ok) throw invariant_violation("verify_tail_bounds: " + rep.detail);
    return rep;
}

MinorizationReport verify_g_minorization(const QuotientMeasure& m) {
    MinorizationReport rep;
    const double cp = m.spec.c_p();
    const double lam = m.spec.lambda_mu;
    double worst = kInf;
    std::size_t bad = 0;
    std::string where;

    auto check_node = [&](double lhs, double rhs, double x) {
        const double slack = (lhs - rhs) / std::max(std::fabs(rhs), 1e-300);
        if (slack < worst) worst = slack;
        if (lhs < rhs * (1.0 - m.tol.invariant_slack) - 1e-300) {
            ++bad;
            if (where.empty()) where = "first at x=" + std::to_string(x);
        }
        ++rep.checked;
    };

    for (int side = 0; side < 2; ++side) {
        const EndpointBehavior& eb = side == 0 ? m.spec.left : m.spec.right;
        double sup_bound = 0.0;
        if (!eb.finite) {
            // g(t) = 1 - (c2/lambda) |t|^{alpha-2}; valid where g stays positive
            const double coef = eb.c2 / lam;
            const double t_pos = std::pow(2.0 * coef, 1.0 / (2.0 - eb.alpha));
            const double t_min = std::max({eb.neighborhood, t_pos, 1e-3});
            const double bound_limit = eb.c2 / (lam * std::sqrt(eb.c1));
            for (std::size_t i = 0; i < m.grid.size(); ++i) {
                const double x = m.grid.x[i];
                if (side == 0 ? (x > -t_min) : (x < t_min)) continue;
                const double g = 1.0 - coef * std::pow(std::fabs(x), eb.alpha - 2.0);
                const double rhs = (cp / m.Z) * m.v_nodes[i] * g / std::fabs(x);
                const double lhs = side == 0 ? m.cdf[i] : m.ccdf[i];
                check_node(lhs, rhs, x);
                const double bexpr =
                    std::fabs(x) * (1.0 - g) / std::sqrt(m.h_at_node(i));
                sup_bound = std::max(sup_bound, bexpr);
                if (bexpr > bound_limit * (1.0 + m.tol.invariant_slack)) {
                    ++bad;
                    if (where.empty()) where = "bound at x=" + std::to_string(x);
                }
            }
        } else if (eb.alpha == 1.0) {
            // finite end: g(t) = 1 - (4 c2 / (lambda edge^2)) w
            const double edge = side == 0 ? m.spec.a : m.spec.b;
            const double coef = 4.0 * eb.c2 / (lam * sq(edge));
            const double w_max = std::min({eb.neighborhood, 0.5 * std::fabs(edge), 1.0 / coef});
            const double bound_limit =
                4.0 * eb.c2 / (lam * std::fabs(edge) * std::sqrt(eb.c1)) * std::sqrt(w_max);
            for (std::size_t i = 0; i < m.grid.size(); ++i) {
                const double x = m.grid.x[i];
                if (std::fabs(x) < 1e-3) continue;
                const double w = side == 0 ? x - m.spec.a : m.spec.b - x;
                if ((side == 0 && x > m.spec.a + w_max) || (side == 1 && x < m.spec.b - w_max))
                    continue;
                const double g = 1.0 - coef * w;
                const double rhs = (cp / m.Z) * m.v_nodes[i] * g / std::fabs(x);
                const double lhs = side == 0 ? m.cdf[i] : m.ccdf[i];
                check_node(lhs, rhs, x);
                const double bexpr =
                    std::fabs(x) * coef * w / std::sqrt(m.h_at_node(i));
                sup_bound = std::max(sup_bound, bexpr);
                if (bexpr > bound_limit * (1.0 + m.tol.invariant_slack)) {
                    ++bad;
                    if (where.empty()) where = "bound at x=" + std::to_string(x);
                }
            }
        }
        // finite ends with alpha > 1 fall outside the minorization criteria
        (side == 0 ? rep.sup_bound_left : rep.sup_bound_right) = sup_bound;
    }
    rep.worst_rel_slack = worst;
    rep.ok = bad == 0;
    rep.detail = rep.ok ? "all checked nodes ok" : std::to_string(bad) + " violations, " + where;
    if (!rep.ok) throw invariant_violation("verify_g_minorization: " + rep.detail);
    return rep;
}

double exact_ipp_residual(const QuotientMeasure& m,
                          const std::function<double(double)>& psi,
                          const std::function<double(double)>& psi_prime) {
    const QuadTable& t = m.table;
    double accum = 0.0;
    // single pass, serial (cheap); residual of Prop-3.1-type identity
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double x = t.x[k];
        accum += (x * psi(x) - m.spec.c_p() * t.h[k] * psi_prime(x)) * t.weight[k];
    }
    return accum / m.Z;
}

void dump_measure_columns(const QuotientMeasure& m, std::ostream& os) {
    os << "node\tv\tdensity\tcdf\n";
    os.precision(17);
    for (std::size_t i = 0; i < m.grid.size(); ++i)
        os << m.grid.x[i] << '\t' << m.v_nodes[i] << '\t' << m.rho_nodes[i] << '\t'
           << m.cdf[i] << '\n';
}

} // namespace qstab
