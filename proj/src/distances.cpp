#include "qstab/distances.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qstab/quadrature.hpp"

namespace qstab {

namespace {

void validate_cdf(const CdfSequence& s, const char* who) {
    if (s.x.size() < 2 || s.x.size() != s.q.size())
        throw invalid_cdf(std::string(who) + ": malformed sequence");
    for (std::size_t i = 1; i < s.x.size(); ++i) {
        if (!(s.x[i] > s.x[i - 1])) throw invalid_cdf(std::string(who) + ": x not increasing");
        if (s.q[i] < s.q[i - 1] - 1e-12)
            throw invalid_cdf(std::string(who) + ": cdf not monotone");
    }
    if (s.q.front() < -1e-9 || s.q.back() > 1.0 + 1e-9)
        throw invalid_cdf(std::string(who) + ": cdf outside [0,1]");
}

Pchip cdf_interp(const CdfSequence& s) {
    if (!s.slopes.empty()) return Pchip(s.x, s.q, s.slopes);
    return Pchip(s.x, s.q);
}

std::vector<double> merge_grids(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> m;
    m.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(m));
    m.erase(std::unique(m.begin(), m.end()), m.end());
    return m;
}

// Clamped evaluation: outside a sequence's covered range the cdf saturates.
double eval_cdf(const Pchip& p, double lo, double hi, double q_lo, double q_hi, double x) {
    if (x <= lo) return q_lo;
    if (x >= hi) return q_hi;
    return std::clamp(p(x), 0.0, 1.0);
}

struct CdfPair {
    Pchip p1, p2;
    double lo1, hi1, q1lo, q1hi;
    double lo2, hi2, q2lo, q2hi;
    std::vector<double> merged;

    double gap(double x) const {
        return eval_cdf(p1, lo1, hi1, q1lo, q1hi, x) - eval_cdf(p2, lo2, hi2, q2lo, q2hi, x);
    }
};

CdfPair make_pair(const CdfSequence& q1, const CdfSequence& q2) {
    validate_cdf(q1, "cdf 1");
    validate_cdf(q2, "cdf 2");
    CdfPair pr{cdf_interp(q1), cdf_interp(q2),
               q1.x.front(), q1.x.back(), q1.q.front(), q1.q.back(),
               q2.x.front(), q2.x.back(), q2.q.front(), q2.q.back(),
               merge_grids(q1.x, q2.x)};
    return pr;
}

} // namespace

double wasserstein1(const CdfSequence& q1, const CdfSequence& q2) {
    CdfPair pr = make_pair(q1, q2);
    // outer regions: one cdf saturated, the other nearly so; the residual
    // tail gaps integrate to less than the cdf-limit tolerance
    double total = 0.0;
    QuadOptions opt;
    opt.abs_tol = 1e-14;
    opt.rel_tol = 1e-10;
    opt.max_depth = 8;
    for (std::size_t i = 0; i + 1 < pr.merged.size(); ++i) {
        QuadResult r = integrate_adaptive(
            [&](double x) { return std::fabs(pr.gap(x)); }, pr.merged[i],
            pr.merged[i + 1], opt);
        total += r.value;
    }
    return total;
}

double total_variation(const DensitySequence& d1, const DensitySequence& d2) {
    if (d1.x.size() < 2 || d1.x.size() != d1.rho.size() || d2.x.size() < 2 ||
        d2.x.size() != d2.rho.size())
        throw invalid_density("total_variation: malformed sequence");
    for (double r : d1.rho)
        if (r < -1e-12) throw invalid_density("total_variation: negative density");
    for (double r : d2.rho)
        if (r < -1e-12) throw invalid_density("total_variation: negative density");
    Pchip r1(d1.x, d1.rho), r2(d2.x, d2.rho);
    auto eval = [](const Pchip& p, const std::vector<double>& xs, double x) {
        if (x <= xs.front() || x >= xs.back()) return 0.0;
        return std::max(p(x), 0.0);
    };
    std::vector<double> merged = merge_grids(d1.x, d2.x);
    QuadOptions opt;
    opt.abs_tol = 1e-14;
    opt.rel_tol = 1e-10;
    opt.max_depth = 8;
    double l1 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
        l1 += integrate_adaptive(
                  [&](double x) {
                      return std::fabs(eval(r1, d1.x, x) - eval(r2, d2.x, x));
                  },
                  merged[i], merged[i + 1], opt)
                  .value;
        m1 += integrate_adaptive([&](double x) { return eval(r1, d1.x, x); }, merged[i],
                                 merged[i + 1], opt)
                  .value;
        m2 += integrate_adaptive([&](double x) { return eval(r2, d2.x, x); }, merged[i],
                                 merged[i + 1], opt)
                  .value;
    }
    if (std::fabs(m1 - m2) > 1e-6)
        throw invalid_density("total_variation: mass mismatch " + std::to_string(m1 - m2));
    return 0.5 * l1;
}

double kolmogorov(const CdfSequence& q1, const CdfSequence& q2) {
    CdfPair pr = make_pair(q1, q2);
    // panel endpoints plus three interior samples find the winning panel;
    // the gap is piecewise cubic, so a local ternary refinement then pins
    // its interior extremum
    double best = 0.0, best_x = pr.merged.front();
    auto consider = [&](double x) {
        const double g = std::fabs(pr.gap(x));
        if (g > best) {
            best = g;
            best_x = x;
        }
    };
    for (std::size_t i = 0; i + 1 < pr.merged.size(); ++i) {
        const double a = pr.merged[i], b = pr.merged[i + 1];
        consider(a);
        for (double frac : {0.25, 0.5, 0.75}) consider(a + frac * (b - a));
    }
    consider(pr.merged.back());
    auto it = std::upper_bound(pr.merged.begin(), pr.merged.end(), best_x);
    std::size_t j = std::max<std::ptrdiff_t>(it - pr.merged.begin() - 1, 0);
    double lo = pr.merged[j > 0 ? j - 1 : 0];
    double hi = pr.merged[std::min(j + 2, pr.merged.size() - 1)];
    for (int k = 0; k < 90; ++k) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (std::fabs(pr.gap(m1)) < std::fabs(pr.gap(m2)))
            lo = m1;
        else
            hi = m2;
    }
    consider(0.5 * (lo + hi));
    return best;
}

KwReport check_kw_comparison(const CdfSequence& q1, const CdfSequence& q2,
                             double density_sup) {
    if (!(density_sup > 0.0) || !std::isfinite(density_sup))
        throw invalid_parameter("check_kw_comparison: density_sup must be finite positive");
    KwReport rep;
    rep.lhs = kolmogorov(q1, q2);
    rep.rhs = 2.0 * std::sqrt(density_sup * wasserstein1(q1, q2));
    rep.ok = rep.lhs <= rep.rhs + 1e-12;
    if (!rep.ok)
        throw invariant_violation("check_kw_comparison: d_K " + std::to_string(rep.lhs) +
                                  " > " + std::to_string(rep.rhs));
    return rep;
}

DualCheckReport w1_dual_check(const CdfSequence& q1, const CdfSequence& q2,
                              std::uint64_t seed, std::size_t n_functions) {
    DualCheckReport rep;
    rep.seed = seed;
    rep.functions = n_functions;
    rep.primal = wasserstein1(q1, q2);
    CdfPair pr = make_pair(q1, q2);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> slope(-1.0, 1.0);
    const double lo = pr.merged.front(), hi = pr.merged.back();
    const std::size_t nknots = 32;
    QuadOptions opt;
    opt.abs_tol = 1e-13;
    opt.rel_tol = 1e-9;
    opt.max_depth = 6;
    for (std::size_t f = 0; f < n_functions; ++f) {
        std::vector<double> slopes(nknots);
        for (double& s : slopes) s = slope(rng);
        // dual value = |int f d(mu - nu)| = |int f' (q2 - q1) dx| for piecewise
        // linear 1-Lipschitz f
        double val = 0.0;
        for (std::size_t j = 0; j < nknots; ++j) {
            const double a = lo + (hi - lo) * double(j) / nknots;
            const double b = lo + (hi - lo) * double(j + 1) / nknots;
            val += slopes[j] *
                   integrate_adaptive([&](double x) { return -pr.gap(x); }, a, b, opt).value;
        }
        rep.worst_dual = std::max(rep.worst_dual, std::fabs(val));
    }
    rep.ok = rep.worst_dual <= rep.primal + 1e-8;
    if (!rep.ok)
        throw invariant_violation("w1_dual_check: dual " + std::to_string(rep.worst_dual) +
                                  " exceeds primal " + std::to_string(rep.primal));
    return rep;
}

} // namespace qstab
