#include "qstab/perturb.hpp"

#include <algorithm>
#include <cmath>

namespace qstab {

namespace {

// mu*-weighted inner product over the cached table.
double inner(const QuotientMeasure& m, const std::function<double(double)>& f,
             const std::function<double(double)>& g, ExecMode mode) {
    const QuadTable& t = m.table;
    return parallel_sum(
               t.size(),
               [&](std::size_t k) { return f(t.x[k]) * g(t.x[k]) * t.weight[k]; }, mode) /
           m.Z;
}

} // namespace

PerturbationDirection project_direction(const QuotientMeasure& m,
                                        const std::function<double(double)>& p_raw,
                                        const std::string& label, ExecMode mode) {
    // Gram-Schmidt on {1, x, x^2, h} under the mu* inner product, with rank
    // detection (h is a combination of the polynomials for several models).
    std::vector<std::function<double(double)>> span = {
        [](double) { return 1.0; },
        [](double x) { return x; },
        [](double x) { return x * x; },
        m.spec.h,
    };
    std::vector<std::function<double(double)>> ortho;
    for (auto& v : span) {
        std::function<double(double)> cur = v;
        for (auto& u : ortho) {
            const double c = inner(m, cur, u, mode);
            auto prev = cur;
            cur = [prev, u, c](double x) { return prev(x) - c * u(x); };
        }
        const double nrm2 = inner(m, cur, cur, mode);
        const double scale2 = inner(m, v, v, mode);
        if (nrm2 > 1e-20 * std::max(1.0, scale2)) {
            const double inv = 1.0 / std::sqrt(nrm2);
            auto prev = cur;
            ortho.push_back([prev, inv](double x) { return prev(x) * inv; });
        }
    }

    std::function<double(double)> p = p_raw;
    for (auto& u : ortho) {
        const double c = inner(m, p, u, mode);
        auto prev = p;
        p = [prev, u, c](double x) { return prev(x) - c * u(x); };
    }

    PerturbationDirection dir;
    dir.label = label;
    dir.p = p;
    dir.p_values.resize(m.grid.size());
    double pmin = kInf, pmax = -kInf;
    for (std::size_t i = 0; i < m.grid.size(); ++i) {
        dir.p_values[i] = p(m.grid.x[i]);
        pmin = std::min(pmin, dir.p_values[i]);
        pmax = std::max(pmax, dir.p_values[i]);
    }
    const double p_norm2 = inner(m, p, p, mode);
    const double raw_norm2 = inner(m, p_raw, p_raw, mode);
    if (!(p_norm2 > 1e-16 * std::max(1.0, raw_norm2)))
        throw degenerate_direction("project_direction: p_raw lies in the constraint span");

    dir.constraints_residual[0] = inner(m, p, [](double) { return 1.0; }, mode);
    dir.constraints_residual[1] = inner(m, p, [](double x) { return x; }, mode);
    dir.constraints_residual[2] = inner(m, p, [](double x) { return x * x; }, mode);
    dir.constraints_residual[3] = inner(m, p, m.spec.h, mode);
    for (double r : dir.constraints_residual)
        if (std::fabs(r) > 1e-9)
            throw invariant_violation("project_direction: constraint residual " +
                                      std::to_string(r));

    const double cap_pos = pmin < 0.0 ? 1.0 / -pmin : kInf; // 1 + eps p >= 0, eps > 0
    const double cap_neg = pmax > 0.0 ? 1.0 / pmax : kInf;  // and for eps < 0
    dir.eps_max = 0.95 * std::min(cap_pos, cap_neg);
    if (!std::isfinite(dir.eps_max))
        throw degenerate_direction("project_direction: p vanishes on the grid");
    return dir;
}

std::vector<std::string> direction_library() {
    return {"cubic", "quintic", "quartic_even", "bump_left", "bump_right", "relaxed_h"};
}

PerturbationDirection make_direction(const QuotientMeasure& m, const std::string& name,
                                     ExecMode mode) {
    auto bump = [](double c, double w) {
        return [c, w](double x) {
            const double u = (x - c) / w;
            return std::fabs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0;
        };
    };
    if (name == "cubic")
        return project_direction(m, [](double x) { return x * x * x; }, name, mode);
    if (name == "quintic")
        return project_direction(m, [](double x) { return std::pow(x, 5); }, name, mode);
    if (name == "quartic_even")
        return project_direction(m, [](double x) { return std::pow(x, 4); }, name, mode);
    if (name == "bump_left") {
        // center the bump in the left half of the covered interval
        const double c = 0.5 * (m.grid.x.front() + 0.0);
        const double w = std::max(0.5, 0.2 * std::fabs(m.grid.x.front()));
        return project_direction(m, bump(std::max(c, m.grid.x.front() * 0.6), w), name, mode);
    }
    if (name == "bump_right") {
        const double c = 0.4 * m.grid.x.back();
        const double w = std::max(0.3, 0.15 * std::fabs(m.grid.x.back()));
        return project_direction(m, bump(c, w), name, mode);
    }
    if (name == "relaxed_h") {
        // strict-inequality regime: project onto the complement of the
        // polynomial constraints only, then push along the h-residual so
        // int h p dmu* < 0. When h lies in span{1, x, x^2} (gaussian, gamma,
        // sphere) there is no residual and the boundary case int h p = 0
        // is all the admissible set offers.
        std::vector<std::function<double(double)>> polys = {
            [](double) { return 1.0; },
            [](double x) { return x; },
            [](double x) { return x * x; },
        };
        auto poly_project = [&](std::function<double(double)> f) {
            std::vector<std::function<double(double)>> ortho;
            for (auto& v : polys) {
                std::function<double(double)> cur = v;
                for (auto& u : ortho) {
                    const double c = inner(m, cur, u, mode);
                    auto prev = cur;
                    cur = [prev, u, c](double x) { return prev(x) - c * u(x); };
                }
                const double inv = 1.0 / std::sqrt(inner(m, cur, cur, mode));
                auto prev = cur;
                ortho.push_back([prev, inv](double x) { return prev(x) * inv; });
            }
            for (auto& u : ortho) {
                const double c = inner(m, f, u, mode);
                auto prev = f;
                f = [prev, u, c](double x) { return prev(x) - c * u(x); };
            }
            return f;
        };
        auto p1 = poly_project(
            bump(0.3 * m.grid.x.back(), std::max(0.4, 0.2 * m.grid.x.back())));
        auto h_perp = poly_project(m.spec.h);
        const double h_perp2 = inner(m, h_perp, h_perp, mode);
        const double h_scale2 = inner(m, m.spec.h, m.spec.h, mode);
        std::function<double(double)> p = p1;
        if (h_perp2 > 1e-14 * std::max(1.0, h_scale2)) {
            const double inv = 1.0 / std::sqrt(h_perp2);
            auto u3 = [h_perp, inv](double x) { return h_perp(x) * inv; };
            const double s_comp = inner(m, p1, u3, mode);
            const double push = s_comp + 0.3 * std::sqrt(inner(m, p1, p1, mode));
            p = [p1, u3, push](double x) { return p1(x) - push * u3(x); };
        }

        PerturbationDirection dir;
        dir.label = name;
        dir.p = p;
        dir.p_values.resize(m.grid.size());
        double pmin = kInf, pmax = -kInf;
        for (std::size_t i = 0; i < m.grid.size(); ++i) {
            dir.p_values[i] = p(m.grid.x[i]);
            pmin = std::min(pmin, dir.p_values[i]);
            pmax = std::max(pmax, dir.p_values[i]);
        }
        dir.constraints_residual[0] = inner(m, p, [](double) { return 1.0; }, mode);
        dir.constraints_residual[1] = inner(m, p, [](double x) { return x; }, mode);
        dir.constraints_residual[2] = inner(m, p, [](double x) { return x * x; }, mode);
        dir.constraints_residual[3] = inner(m, p, m.spec.h, mode);
        if (std::fabs(dir.constraints_residual[0]) > 1e-9 ||
            std::fabs(dir.constraints_residual[1]) > 1e-9 ||
            std::fabs(dir.constraints_residual[2]) > 1e-9)
            throw invariant_violation("relaxed_h direction: equality constraints broken");
        if (dir.constraints_residual[3] > 1e-9)
            throw invariant_violation("relaxed_h direction: h component positive");
        const double cap_pos = pmin < 0.0 ? 1.0 / -pmin : kInf;
        // int h dnu* <= lambda only holds for eps >= 0 here
        dir.eps_max = 0.95 * cap_pos;
        dir.nonneg_eps_only = dir.constraints_residual[3] < -1e-12;
        return dir;
    }
    throw invalid_parameter("unknown direction: " + name);
}

std::function<double(double)> PerturbedMeasure::tilt() const {
    auto p = direction.p;
    const double e = eps;
    return [p, e](double x) { return 1.0 + e * p(x); };
}

PerturbedMeasure make_perturbed(const QuotientMeasure& m,
                                const PerturbationDirection& dir, double eps,
                                const SpectralOptions& sopt) {
    if (std::fabs(eps) > dir.eps_max * (1.0 + 1e-12))
        throw invalid_parameter("make_perturbed: |eps| exceeds eps_max");
    if (dir.nonneg_eps_only && eps < 0.0)
        throw invalid_parameter("make_perturbed: direction admits eps >= 0 only");
    PerturbedMeasure nu;
    nu.base = &m;
    nu.direction = dir;
    nu.eps = eps;

    const std::size_t nn = m.grid.size();
    nu.density.resize(nn);
    for (std::size_t i = 0; i < nn; ++i) {
        nu.density[i] = m.rho_nodes[i] * (1.0 + eps * dir.p_values[i]);
        if (nu.density[i] < 0.0)
            throw invariant_violation("make_perturbed: negative density at node");
    }

    // nu* cdf by reweighted panel masses from both ends.
    const QuadTable& t = m.table;
    auto tilt = nu.tilt();
    const std::size_t np = t.npanels();
    std::vector<double> pm(np + 2, 0.0);
    {
        auto mass = [&](std::size_t lo, std::size_t hi) {
            double s = 0.0;
            for (std::size_t k = lo; k < hi; ++k) s += t.weight[k] * tilt(t.x[k]);
            return s;
        };
        parallel_for(np, [&](std::size_t p) {
            pm[p + 1] = mass(t.panel_begin[p], t.panel_begin[p + 1]);
        }, sopt.mode);
        pm[0] = mass(0, t.panel_begin.front());
        pm[np + 1] = mass(t.panel_begin.back(), t.size());
    }
    double total = 0.0;
    for (double v : pm) total += v;
    nu.mass = total / m.Z;
    if (std::fabs(nu.mass - 1.0) > 1e-9)
        throw invariant_violation("make_perturbed: mass deviates from 1 by " +
                                  std::to_string(nu.mass - 1.0));
    nu.cdf.resize(nn);
    nu.ccdf.resize(nn);
    double acc = pm[0];
    for (std::size_t i = 0; i < nn; ++i) {
        nu.cdf[i] = acc / total;
        if (i < np) acc += pm[i + 1];
    }
    acc = pm[np + 1];
    for (std::size_t i = nn; i-- > 0;) {
        nu.ccdf[i] = acc / total;
        if (i > 0) acc += pm[i];
    }

    SpectralResult sr = spectral_gap_weighted(m, tilt, sopt);
    nu.lambda_nu = sr.lambda1;
    nu.c_p_sharp = sr.c_p_sharp;
    nu.delta = m.spec.lambda_mu - nu.lambda_nu;
    if (nu.delta < -1e-9)
        throw invariant_violation("make_perturbed: delta = " + std::to_string(nu.delta) +
                                  " below -1e-9");
    return nu;
}

ApproxIppReport verify_approx_ipp(const PerturbedMeasure& nu,
                                  const std::function<double(double)>& psi,
                                  const std::function<double(double)>& psi_prime,
                                  ExecMode mode) {
    const QuotientMeasure& m = *nu.base;
    const QuadTable& t = m.table;
    auto tilt = nu.tilt();

    double core = 0.0, energy = 0.0, smu = 0.0;
    {
        std::vector<double> parts(3 * (t.npanels() + 2), 0.0);
        auto accum = [&](std::size_t slot, std::size_t lo, std::size_t hi) {
            double c = 0.0, e = 0.0, s = 0.0;
            for (std::size_t k = lo; k < hi; ++k) {
                const double x = t.x[k];
                const double w = t.weight[k] * tilt(x);
                const double dp = psi_prime(x), ps = psi(x);
                c += (t.h[k] * dp - x / nu.c_p_sharp * ps) * w;
                e += t.h[k] * dp * dp * w;
                s += (t.h[k] * dp - m.spec.lambda_mu * x * ps) * w;
            }
            parts[3 * slot] = c;
            parts[3 * slot + 1] = e;
            parts[3 * slot + 2] = s;
        };
        parallel_for(t.npanels(), [&](std::size_t p) {
            accum(p + 1, t.panel_begin[p], t.panel_begin[p + 1]);
        }, mode);
        accum(0, 0, t.panel_begin.front());
        accum(t.npanels() + 1, t.panel_begin.back(), t.size());
        for (std::size_t s = 0; s < t.npanels() + 2; ++s) {
            core += parts[3 * s];
            energy += parts[3 * s + 1];
            smu += parts[3 * s + 2];
        }
        const double zmass = m.Z * nu.mass;
        core /= zmass;
        energy /= zmass;
        smu /= zmass;
    }

    ApproxIppReport rep;
    const double delta = std::max(nu.delta, 0.0);
    rep.lhs_core = std::fabs(core);
    rep.rhs_core = std::sqrt(delta * energy);
    rep.lhs_assembled = std::fabs(smu);
    rep.rhs_assembled =
        (std::sqrt(delta) + std::sqrt(nu.c_p_sharp) * delta) * std::sqrt(energy);
    const double slack = 1e-8 * (1.0 + rep.rhs_core);
    rep.ok = rep.lhs_core <= rep.rhs_core + slack &&
             rep.lhs_assembled <= rep.rhs_assembled + slack;
    rep.detail = rep.ok ? "approximate IPP holds" : "approximate IPP violated";
    if (!rep.ok) throw invariant_violation("verify_approx_ipp: " + rep.detail);
    return rep;
}

} // namespace qstab
