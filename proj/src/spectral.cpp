#include "qstab/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "qstab/interp.hpp"

namespace qstab {

namespace {

// Symmetric tridiagonal pencil (K, M), mass-normalized; w holds int phi_i dnu.
struct Pencil {
    std::vector<double> kd, ko;
    std::vector<double> md, mo;
    std::vector<double> w;
    std::size_t n() const { return kd.size(); }
};

// Assembly over the node subset picked by `stride` (first/last always kept,
// giving nested P1 spaces). Element integrals come from the cached table;
// `tiltk` reweights table point k pointwise.
Pencil assemble(const QuotientMeasure& m,
                const std::function<double(std::size_t, double)>& tiltk,
                std::size_t stride, ExecMode mode) {
    const QuadTable& t = m.table;
    const std::size_t nn = m.grid.size();
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < nn; i += stride) keep.push_back(i);
    if (keep.back() != nn - 1) keep.push_back(nn - 1);
    const std::size_t ne = keep.size() - 1;

    struct Elem {
        double k = 0.0, m00 = 0.0, m01 = 0.0, m11 = 0.0, w0 = 0.0, w1 = 0.0;
        double mass = 0.0;
    };
    std::vector<Elem> elems(ne);
    parallel_for(
        ne,
        [&](std::size_t e) {
            const std::size_t lo_node = keep[e], hi_node = keep[e + 1];
            const double X0 = m.grid.x[lo_node], X1 = m.grid.x[hi_node];
            const double inv_dx = 1.0 / (X1 - X0);
            Elem el;
            for (std::size_t p = lo_node; p < hi_node; ++p) {
                for (std::size_t k = t.panel_begin[p]; k < t.panel_begin[p + 1]; ++k) {
                    const double wk = t.weight[k] * tiltk(k, t.x[k]);
                    const double b1 = (t.x[k] - X0) * inv_dx;
                    const double b0 = 1.0 - b1;
                    el.k += t.h[k] * wk;
                    el.m00 += wk * b0 * b0;
                    el.m01 += wk * b0 * b1;
                    el.m11 += wk * b1 * b1;
                    el.w0 += wk * b0;
                    el.w1 += wk * b1;
                    el.mass += wk;
                }
            }
            el.k *= inv_dx * inv_dx;
            elems[e] = el;
        },
        mode);

    // The P1 space continues constantly past the outer nodes, so the sliver
    // regions feed mass and mean terms into the boundary dofs and nothing
    // into the stiffness.
    double sliver_l = 0.0, sliver_r = 0.0;
    for (std::size_t k = 0; k < t.panel_begin.front(); ++k)
        sliver_l += t.weight[k] * tiltk(k, t.x[k]);
    for (std::size_t k = t.panel_begin.back(); k < t.size(); ++k)
        sliver_r += t.weight[k] * tiltk(k, t.x[k]);

    Pencil pc;
    const std::size_t n = keep.size();
    pc.kd.assign(n, 0.0);
    pc.ko.assign(n - 1, 0.0);
    pc.md.assign(n, 0.0);
    pc.mo.assign(n - 1, 0.0);
    pc.w.assign(n, 0.0);
    double mass = sliver_l + sliver_r;
    for (std::size_t e = 0; e < ne; ++e) {
        const Elem& el = elems[e];
        if (!(el.mass > 0.0))
            throw degenerate_measure("spectral assembly: element with no mass");
        pc.kd[e] += el.k;
        pc.kd[e + 1] += el.k;
        pc.ko[e] -= el.k;
        pc.md[e] += el.m00;
        pc.md[e + 1] += el.m11;
        pc.mo[e] += el.m01;
        pc.w[e] += el.w0;
        pc.w[e + 1] += el.w1;
        mass += el.mass;
    }
    pc.md.front() += sliver_l;
    pc.w.front() += sliver_l;
    pc.md.back() += sliver_r;
    pc.w.back() += sliver_r;
    const double inv = 1.0 / mass;
    for (auto* v : {&pc.kd, &pc.ko, &pc.md, &pc.mo, &pc.w})
        for (double& x : *v) x *= inv;
    return pc;
}

// Eigenvalues of (K, M) strictly below sigma, by the inertia of K - sigma M.
int sturm_count(const Pencil& p, double sigma) {
    int count = 0;
    double d_prev = 1.0, off_prev = 0.0;
    for (std::size_t i = 0; i < p.n(); ++i) {
        double d = p.kd[i] - sigma * p.md[i];
        if (i > 0) d -= off_prev * off_prev / d_prev;
        if (d == 0.0) d = -1e-300;
        if (d < 0.0) ++count;
        if (i + 1 < p.n()) off_prev = p.ko[i] - sigma * p.mo[i];
        d_prev = d;
    }
    return count;
}

// LU with partial pivoting for (K - sigma M) z = rhs (dgttrf/dgttrs layout).
void shifted_solve(const Pencil& p, double sigma, std::vector<double>& b) {
    const std::size_t n = p.n();
    std::vector<double> dl(n - 1), d(n), du(n - 1), du2(n >= 2 ? n - 2 : 0, 0.0);
    std::vector<char> swap(n - 1, 0);
    for (std::size_t i = 0; i < n; ++i) d[i] = p.kd[i] - sigma * p.md[i];
    for (std::size_t i = 0; i + 1 < n; ++i) dl[i] = du[i] = p.ko[i] - sigma * p.mo[i];
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::fabs(d[i]) >= std::fabs(dl[i])) {
            if (d[i] == 0.0) d[i] = 1e-300;
            const double fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
            if (i + 2 < n) du2[i] = 0.0;
        } else {
            swap[i] = 1;
            const double fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            const double temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du[i + 1];
            }
        }
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!swap[i]) {
            b[i + 1] -= dl[i] * b[i];
        } else {
            const double temp = b[i];
            b[i] = b[i + 1];
            b[i + 1] = temp - dl[i] * b[i];
        }
    }
    if (d[n - 1] == 0.0) d[n - 1] = 1e-300;
    b[n - 1] /= d[n - 1];
    if (n >= 2) {
        if (d[n - 2] == 0.0) d[n - 2] = 1e-300;
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for (std::size_t i = n - 2; i-- > 0;) {
        if (d[i] == 0.0) d[i] = 1e-300;
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
}

struct EigOut {
    double lambda = 0.0;
    std::vector<double> vec;
    double residual = 0.0;
};

EigOut second_eigenpair(const Pencil& p, double gap_floor,
                        const std::vector<double>& x_nodes) {
    double hi = 1.0;
    for (int it = 0; it < 200 && sturm_count(p, hi) < 2; ++it) hi *= 2.0;
    if (sturm_count(p, hi) < 2) throw no_gap_detected("pencil has fewer than 2 modes");
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (sturm_count(p, mid) >= 2)
            hi = mid;
        else
            lo = mid;
    }
    const double lam_bisect = 0.5 * (lo + hi);
    if (!(lam_bisect > gap_floor))
        throw no_gap_detected("second eigenvalue not separated from 0");

    const std::size_t n = p.n();
    auto m_apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = p.md[i] * x[i];
            if (i > 0) y[i] += p.mo[i - 1] * x[i - 1];
            if (i + 1 < n) y[i] += p.mo[i] * x[i + 1];
        }
    };
    auto k_apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = p.kd[i] * x[i];
            if (i > 0) y[i] += p.ko[i - 1] * x[i - 1];
            if (i + 1 < n) y[i] += p.ko[i] * x[i + 1];
        }
    };
    auto deflate = [&](std::vector<double>& x) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += p.w[i] * x[i];
        for (double& v : x) v -= mean;
    };
    std::vector<double> mx(n);
    auto var_of = [&](const std::vector<double>& x) {
        m_apply(x, mx);
        double xmx = 0.0, wx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            xmx += x[i] * mx[i];
            wx += p.w[i] * x[i];
        }
        return xmx - wx * wx;
    };

    std::vector<double> z = x_nodes; // Id is the typical gap direction
    std::vector<double> rhs(n), kx(n);
    const double sigma = lam_bisect * (1.0 - 1e-7) - 1e-14;
    double lam = lam_bisect;
    for (int it = 0; it < 6; ++it) {
        deflate(z);
        m_apply(z, rhs);
        shifted_solve(p, sigma, rhs);
        z.swap(rhs);
        deflate(z);
        const double nrm = std::sqrt(std::max(var_of(z), 1e-300));
        for (double& v : z) v /= nrm;
        k_apply(z, kx);
        double num = 0.0;
        for (std::size_t i = 0; i < n; ++i) num += z[i] * kx[i];
        lam = num / var_of(z);
    }
    EigOut out;
    k_apply(z, kx);
    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i) num += z[i] * kx[i];
    out.residual = std::fabs(num - lam * var_of(z)) / lam;
    // orient along Id
    double corr = 0.0;
    m_apply(z, mx);
    for (std::size_t i = 0; i < n; ++i) corr += x_nodes[i] * mx[i];
    if (corr < 0.0)
        for (double& v : z) v = -v;
    out.vec = std::move(z);
    out.lambda = lam;
    return out;
}

std::function<double(std::size_t, double)> wrap(const std::function<double(double)>& tilt) {
    return [tilt](std::size_t, double x) { return tilt(x); };
}

} // namespace

SpectralResult spectral_gap_weighted(const QuotientMeasure& m,
                                     const std::function<double(double)>& tilt,
                                     const SpectralOptions& opt) {
    SpectralResult res;
    std::vector<std::size_t> strides = opt.convergence_ladder
                                           ? std::vector<std::size_t>{4, 2, 1}
                                           : std::vector<std::size_t>{1};
    auto tiltk = wrap(tilt);
    for (std::size_t s : strides) {
        Pencil p = assemble(m, tiltk, s, opt.mode);
        std::vector<double> xn;
        for (std::size_t i = 0; i < m.grid.size(); i += s) xn.push_back(m.grid.x[i]);
        if (xn.back() != m.grid.x.back()) xn.push_back(m.grid.x.back());
        EigOut eig = second_eigenpair(p, m.tol.spectral_gap_floor, xn);
        res.grid_convergence.push_back(eig.lambda);
        if (s == 1) {
            res.lambda1 = eig.lambda;
            res.rayleigh_residual = eig.residual;
            res.eigenfunction = std::move(eig.vec);
        }
    }
    res.c_p_sharp = 1.0 / res.lambda1;
    const std::size_t ng = res.grid_convergence.size();
    res.reported_precision =
        ng >= 2 ? std::fabs(res.grid_convergence[ng - 1] - res.grid_convergence[ng - 2])
                : kNaN;
    if (res.rayleigh_residual > m.tol.spectral_residual)
        throw numerical_failure("spectral_gap: rayleigh residual " +
                                std::to_string(res.rayleigh_residual));
    return res;
}

SpectralResult spectral_gap(const std::vector<double>& density_nodes,
                            const QuotientMeasure& m, const SpectralOptions& opt) {
    if (density_nodes.size() != m.grid.size())
        throw invalid_parameter("spectral_gap: density sequence size mismatch");
    for (double d : density_nodes)
        if (d < 0.0 || !std::isfinite(d))
            throw invalid_parameter("spectral_gap: density must be nonnegative");
    Pchip dens(m.grid.x, density_nodes);
    const QuadTable& t = m.table;
    // Reweight table point k so that weight * tilt = plain_w * dens(x):
    // integrates the supplied density rather than mu*.
    auto tiltk = [&t, dens](std::size_t k, double x) {
        return t.weight[k] > 0.0 ? std::max(dens(x), 0.0) * t.plain_w[k] / t.weight[k]
                                 : 0.0;
    };
    SpectralResult res;
    std::vector<std::size_t> strides = opt.convergence_ladder
                                           ? std::vector<std::size_t>{4, 2, 1}
                                           : std::vector<std::size_t>{1};
    for (std::size_t s : strides) {
        Pencil p = assemble(m, tiltk, s, opt.mode);
        std::vector<double> xn;
        for (std::size_t i = 0; i < m.grid.size(); i += s) xn.push_back(m.grid.x[i]);
        if (xn.back() != m.grid.x.back()) xn.push_back(m.grid.x.back());
        EigOut eig = second_eigenpair(p, m.tol.spectral_gap_floor, xn);
        res.grid_convergence.push_back(eig.lambda);
        if (s == 1) {
            res.lambda1 = eig.lambda;
            res.rayleigh_residual = eig.residual;
            res.eigenfunction = std::move(eig.vec);
        }
    }
    res.c_p_sharp = 1.0 / res.lambda1;
    const std::size_t ng = res.grid_convergence.size();
    res.reported_precision =
        ng >= 2 ? std::fabs(res.grid_convergence[ng - 1] - res.grid_convergence[ng - 2])
                : kNaN;
    return res;
}

double rayleigh_quotient(const QuotientMeasure& m,
                         const std::function<double(double)>& tilt,
                         const std::function<double(double)>& psi,
                         const std::function<double(double)>& psi_prime, ExecMode mode) {
    const QuadTable& t = m.table;
    const std::size_t np = t.npanels();
    std::vector<double> parts(4 * (np + 2), 0.0);
    auto accum = [&](std::size_t slot, std::size_t lo, std::size_t hi) {
        double energy = 0.0, mean = 0.0, second = 0.0, mass = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            const double wk = t.weight[k] * tilt(t.x[k]);
            const double ps = psi(t.x[k]);
            energy += t.h[k] * sq(psi_prime(t.x[k])) * wk;
            mean += ps * wk;
            second += ps * ps * wk;
            mass += wk;
        }
        parts[4 * slot] = energy;
        parts[4 * slot + 1] = mean;
        parts[4 * slot + 2] = second;
        parts[4 * slot + 3] = mass;
    };
    parallel_for(
        np, [&](std::size_t p) { accum(p + 1, t.panel_begin[p], t.panel_begin[p + 1]); },
        mode);
    accum(0, 0, t.panel_begin.front());
    accum(np + 1, t.panel_begin.back(), t.size());
    double energy = 0.0, mean = 0.0, second = 0.0, mass = 0.0;
    for (std::size_t s = 0; s < np + 2; ++s) {
        energy += parts[4 * s];
        mean += parts[4 * s + 1];
        second += parts[4 * s + 2];
        mass += parts[4 * s + 3];
    }
    energy /= mass;
    mean /= mass;
    second /= mass;
    const double var = second - mean * mean;
    if (!(var > 1e-14 * std::max(1.0, second)))
        throw constant_test_function("rayleigh_quotient: Var(psi) = 0");
    return energy / var;
}

} // namespace qstab
