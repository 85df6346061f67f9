#include "qstab/model.hpp"

#include <cmath>
#include <memory>

#include "qstab/config.hpp"
#include "qstab/interp.hpp"
#include "qstab/quadrature.hpp"
#include "qstab/rootfind.hpp"

namespace qstab {

DiffusionSpec make_gaussian(double c_p) {
    if (!(c_p > 0.0)) throw invalid_parameter("make_gaussian: c_p must be > 0");
    DiffusionSpec s;
    s.name = "gaussian(c_p=" + std::to_string(c_p) + ")";
    s.a = -kInf;
    s.b = kInf;
    const double hval = 1.0 / c_p;
    s.h = [hval](double) { return hval; };
    s.lambda_mu = 1.0 / c_p;
    s.kappa_analytic = hval;
    // Pushforward of the normalized eigenfunction: always N(0,1). (The h and
    // lambda scales cancel in v = exp(-lambda int u/h).)
    s.closed_form_density = [](double x) {
        return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    };
    EndpointBehavior e;
    e.finite = false;
    e.alpha = 0.0;
    e.c1 = hval;
    e.c2 = hval;
    e.neighborhood = 1.0;
    s.left = e;
    s.right = e;
    return s;
}

DiffusionSpec make_gamma(double s_par, double theta) {
    if (!(s_par > 0.0) || !(theta > 0.0))
        throw invalid_parameter("make_gamma: s and theta must be > 0");
    DiffusionSpec s;
    s.name = "gamma(s=" + std::to_string(s_par) + ",theta=" + std::to_string(theta) + ")";
    const double rs = std::sqrt(s_par);
    s.a = -kInf;
    s.b = rs;
    // Gamma(f0) for the normalized Laguerre eigenfunction f0 = (s - x/theta)/sqrt(s)
    // maps to h(t) = (s - sqrt(s) t) / (s theta); this reproduces the
    // mu* density (sqrt(s)/e)^s (sqrt(s)-t)^{s-1} e^{sqrt(s) t} / Gamma(s).
    const double denom = s_par * theta;
    s.h = [rs, denom, s_par](double t) { return (s_par - rs * t) / denom; };
    s.lambda_mu = 1.0 / theta;

    const double norm = std::pow(rs / M_E, s_par) / std::tgamma(s_par);
    s.closed_form_density = [rs, s_par, norm](double x) {
        return norm * std::pow(rs - x, s_par - 1.0) * std::exp(rs * x);
    };
    s.closed_form_density_edge = [rs, s_par, norm](int dir, double w) {
        if (dir < 0) return kNaN; // left end is infinite
        return norm * std::pow(w, s_par - 1.0) * std::exp(rs * (rs - w));
    };

    EndpointBehavior left; // t -> -inf, alpha = 1
    left.finite = false;
    left.alpha = 1.0;
    left.c1 = 1.0 / theta;            // h >= 1/theta on t <= 0
    left.c2 = 2.0 / (rs * theta);     // h <= c2 |t| for |t| >= sqrt(s)
    left.neighborhood = std::max(1.0, rs);
    s.left = left;

    EndpointBehavior right; // linear vanishing at b = sqrt(s)
    right.finite = true;
    right.alpha = 1.0;
    const double clin = 1.0 / (rs * theta); // h = clin * (b - t) exactly
    right.c1 = clin;
    right.c2 = clin;
    right.neighborhood = std::min(1.0, rs);
    EdgeModel em;
    em.gamma_c = s_par; // lambda * b / clin = sqrt(s)/theta * sqrt(s) theta
    em.h_of_w = [clin](double w) { return clin * w; };
    right.edge = em;
    s.right = right;
    return s;
}

DiffusionSpec make_sphere(int d) {
    if (d < 1) throw invalid_parameter("make_sphere: d must be >= 1");
    DiffusionSpec s;
    s.name = "sphere(d=" + std::to_string(d) + ")";
    const double b = std::sqrt(double(d + 1));
    s.a = -b;
    s.b = b;
    const double d1 = double(d + 1);
    s.h = [d1](double t) { return d1 - t * t; };
    s.lambda_mu = double(d);

    // density ~ (d+1-t^2)^{d/2-1}; normalizer via Beta(1/2, d/2).
    const double expo = 0.5 * d - 1.0;
    const double Znorm = std::pow(d1, 0.5 * d - 0.5) *
                         std::exp(std::lgamma(0.5) + std::lgamma(0.5 * d) -
                                  std::lgamma(0.5 * d + 0.5));
    s.closed_form_density = [d1, expo, Znorm](double t) {
        return std::pow(d1 - t * t, expo) / Znorm;
    };
    s.closed_form_density_edge = [b, expo, Znorm](int, double w) {
        return std::pow(w * (2.0 * b - w), expo) / Znorm;
    };

    EndpointBehavior e;
    e.finite = true;
    e.alpha = 1.0;
    e.c1 = b;       // sqrt(d+1) (b -+ t) <= h
    e.c2 = 2.0 * b; // h <= 2 sqrt(d+1) (b -+ t)
    e.neighborhood = std::min(1.0, b);
    EdgeModel em;
    em.gamma_c = 0.5 * d; // lambda * b / (2b)
    em.h_of_w = [b](double w) { return w * (2.0 * b - w); };
    e.edge = em;
    s.left = e;
    s.right = e;
    return s;
}

double Poly::operator()(double x) const {
    double y = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) y = y * x + c[k];
    return y;
}

Poly Poly::derivative() const {
    Poly d;
    if (c.size() <= 1) {
        d.c = {0.0};
        return d;
    }
    d.c.resize(c.size() - 1);
    for (std::size_t k = 1; k < c.size(); ++k) d.c[k - 1] = c[k] * double(k);
    return d;
}

double log_concave_normalizer(const std::function<double(double)>& phi,
                              const std::function<double(double)>& phi_prime,
                              double dom_lo, double dom_hi) {
    auto wdens = [&](double x) { return std::exp(-phi(x)); };
    auto wnum = [&](double x) { return sq(phi_prime(x)) * std::exp(-phi(x)); };
    QuadOptions opt;
    opt.rel_tol = 1e-12;
    double lo = std::isfinite(dom_lo) ? dom_lo : -1.0;
    double hi = std::isfinite(dom_hi) ? dom_hi : 1.0;
    double num = integrate_checked(wnum, lo, hi, opt);
    double den = integrate_checked(wdens, lo, hi, opt);
    if (!std::isfinite(dom_lo)) {
        num += integrate_tail(wnum, lo, -1, 1.0, std::fabs(num) + 1.0, opt);
        den += integrate_tail(wdens, lo, -1, 1.0, std::fabs(den) + 1.0, opt);
    }
    if (!std::isfinite(dom_hi)) {
        num += integrate_tail(wnum, hi, +1, 1.0, std::fabs(num) + 1.0, opt);
        den += integrate_tail(wdens, hi, +1, 1.0, std::fabs(den) + 1.0, opt);
    }
    if (!(den > 0.0) || !std::isfinite(num))
        throw model_not_normalizable("log_concave_normalizer: weight not integrable");
    return num / den;
}

DiffusionSpec make_log_concave(std::function<double(double)> phi_prime,
                               std::function<double(double)> phi_second,
                               double dom_lo, double dom_hi, double f0_scale,
                               std::function<double(double)> phi) {
    if (!(f0_scale > 0.0)) throw invalid_parameter("make_log_concave: bad f0_scale");
    const double sigma = f0_scale;

    // Strict convexity probe; interior zeros of phi'' violate Assumption 3.
    {
        double lo = std::isfinite(dom_lo) ? dom_lo : -8.0;
        double hi = std::isfinite(dom_hi) ? dom_hi : 8.0;
        for (int i = 0; i <= 256; ++i) {
            const double x = lo + (hi - lo) * i / 256.0;
            if (!(phi_second(x) > 0.0))
                throw not_strictly_convex("make_log_concave: phi'' <= 0 at x=" +
                                          std::to_string(x));
        }
    }

    // Seed table for phi'^{-1}: bracketing from scratch at every h() call is
    // far too slow for quadrature-heavy consumers. Newton from the seeded
    // start converges in a few steps; out-of-range queries fall back to the
    // bracketed solve.
    auto seed = std::make_shared<Pchip>([&] {
        double X = 4.0;
        auto inside = [&](double x) {
            return x > (std::isfinite(dom_lo) ? dom_lo : -kInf) &&
                   x < (std::isfinite(dom_hi) ? dom_hi : kInf);
        };
        while (std::fabs(phi_prime(X)) < 1e8 && inside(2.0 * X) && X < 1e7) X *= 2.0;
        double lo = std::isfinite(dom_lo) ? dom_lo + 1e-6 * (1.0 + std::fabs(dom_lo)) : -X;
        double hi = std::isfinite(dom_hi) ? dom_hi - 1e-6 * (1.0 + std::fabs(dom_hi)) : X;
        const int nseed = 2048;
        std::vector<double> ys, xs;
        for (int i = 0; i <= nseed; ++i) {
            // denser near 0 via sinh spacing
            const double u = -1.0 + 2.0 * double(i) / nseed;
            const double x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * std::sinh(3.0 * u) /
                                                   std::sinh(3.0);
            if (!xs.empty() && !(x > xs.back())) continue;
            xs.push_back(x);
            ys.push_back(phi_prime(x));
        }
        return Pchip(ys, xs);
    }());

    auto invert = [phi_prime, phi_second, dom_lo, dom_hi, seed](double t) {
        const auto& ys = seed->abscissae();
        if (t >= ys.front() && t <= ys.back()) {
            double x = (*seed)(t);
            for (int it = 0; it < 8; ++it) {
                const double f = phi_prime(x) - t;
                const double d = phi_second(x);
                if (!(d > 0.0)) break;
                const double step = f / d;
                x -= step;
                if (std::fabs(step) <= 1e-15 * (1.0 + std::fabs(x))) return x;
            }
            if (std::fabs(phi_prime(x) - t) <= 1e-10 * (1.0 + std::fabs(t))) return x;
        }
        double lo, hi;
        const double limit_lo = std::isfinite(dom_lo) ? dom_lo : -1e308;
        const double limit_hi = std::isfinite(dom_hi) ? dom_hi : 1e308;
        expand_bracket(phi_prime, t, 0.0, 0.5, limit_lo, limit_hi, lo, hi);
        return solve_increasing(phi_prime, phi_second, t, lo, hi, 1e-12);
    };

    DiffusionSpec s;
    s.name = "log_concave";
    s.a = std::isfinite(dom_lo) ? phi_prime(dom_lo) / sigma : -kInf;
    s.b = std::isfinite(dom_hi) ? phi_prime(dom_hi) / sigma : kInf;
    if (!(s.a < 0.0 && s.b > 0.0))
        throw invalid_domain("make_log_concave: interval must contain 0");
    s.lambda_mu = 1.0;
    s.h = [invert, phi_second, sigma](double t) {
        return phi_second(invert(sigma * t)) / (sigma * sigma);
    };
    if (phi) {
        // Moment-measure density, rescaled by the eigenfunction normalization.
        const double N = [&] {
            auto w = [&](double x) { return std::exp(-phi(x)); };
            QuadOptions opt;
            opt.rel_tol = 1e-12;
            double lo = std::isfinite(dom_lo) ? dom_lo : -1.0;
            double hi = std::isfinite(dom_hi) ? dom_hi : 1.0;
            double den = integrate_checked(w, lo, hi, opt);
            if (!std::isfinite(dom_lo))
                den += integrate_tail(w, lo, -1, 1.0, den, opt);
            if (!std::isfinite(dom_hi))
                den += integrate_tail(w, hi, +1, 1.0, den, opt);
            return den;
        }();
        s.closed_form_density = [invert, phi, phi_second, sigma, N](double t) {
            const double x = invert(sigma * t);
            return sigma * std::exp(-phi(x)) / (N * phi_second(x));
        };
    }
    return s;
}

DiffusionSpec make_quartic() {
    auto phi = [](double x) { return 0.25 * x * x * x * x + 0.5 * x * x; };
    auto phi1 = [](double x) { return x * x * x + x; };
    auto phi2 = [](double x) { return 3.0 * x * x + 1.0; };
    const double sigma2 = log_concave_normalizer(phi, phi1, -kInf, kInf);
    const double sigma = std::sqrt(sigma2);
    DiffusionSpec s = make_log_concave(phi1, phi2, -kInf, kInf, sigma, phi);
    s.name = "quartic";
    s.kappa_analytic = 1.0 / sigma2; // phi'' min is at x = 0

    EndpointBehavior e; // h(t) ~ 3 sigma^{-4/3} |t|^{2/3} at both ends
    e.finite = false;
    e.alpha = 2.0 / 3.0;
    e.c1 = 1.0 / sigma2;
    e.c2 = 4.0 * std::pow(sigma, -4.0 / 3.0);
    e.neighborhood = std::max(1.0, 2.0 / sigma);
    s.left = e;
    s.right = e;
    return s;
}

namespace {

// Tail behavior of h for a polynomial potential, read off the leading term:
// phi ~ c_m x^m gives h(t) ~ C |t|^alpha with alpha = (m-2)/(m-1) and
// C = m(m-1) c_m sigma^{-2} (sigma/(m c_m))^alpha on each side.
void declare_poly_tails(DiffusionSpec& spec, const Poly& phi, double sigma) {
    const std::size_t m = phi.c.size() - 1;
    const double cm = phi.c.back();
    if (m < 2 || !(cm > 0.0)) return;
    const double alpha = double(m - 2) / double(m - 1);
    const double C = double(m) * double(m - 1) * cm / (sigma * sigma) *
                     std::pow(sigma / (double(m) * cm), alpha);
    // find a neighborhood where the leading term dominates within factor 2
    double nb = 1.0;
    for (int it = 0; it < 60; ++it) {
        bool ok = true;
        for (int j = 0; j <= 8; ++j) {
            const double t = nb * (1.0 + j);
            for (double x : {t, -t}) {
                const double hv = spec.h(x);
                const double lead = C * std::pow(std::fabs(x), alpha);
                if (!(hv >= 0.5 * lead && hv <= 2.0 * lead)) ok = false;
            }
        }
        if (ok) break;
        nb *= 2.0;
    }
    EndpointBehavior e;
    e.finite = false;
    e.alpha = alpha;
    e.c1 = 0.5 * C;
    e.c2 = 2.0 * C;
    e.neighborhood = std::max(nb, std::pow(0.5, 1.0 / std::max(2.0 - alpha, 1e-9)));
    spec.left = e;
    spec.right = e;
}

} // namespace

DiffusionSpec model_from_config(const KeyValues& kv) {
    const std::string family = kv.get_string("family");
    if (family == "gaussian") return make_gaussian(kv.get_number("c_p", 1.0));
    if (family == "gamma")
        return make_gamma(kv.get_number("s", 1.0), kv.get_number("theta", 1.0));
    if (family == "sphere") return make_sphere(int(kv.get_number("d", 2.0)));
    if (family == "quartic") return make_quartic();
    if (family == "log_concave") {
        Poly phi;
        phi.c = kv.get_numbers("phi_coeffs");
        if (phi.c.size() < 3)
            throw invalid_parameter("log_concave: phi_coeffs needs degree >= 2");
        Poly d1 = phi.derivative();
        Poly d2 = d1.derivative();
        double scale = 1.0;
        if (kv.get_bool("normalize", true)) {
            scale = std::sqrt(log_concave_normalizer(
                [phi](double x) { return phi(x); }, [d1](double x) { return d1(x); },
                -kInf, kInf));
        }
        DiffusionSpec s = make_log_concave(
            [d1](double x) { return d1(x); }, [d2](double x) { return d2(x); }, -kInf,
            kInf, scale, [phi](double x) { return phi(x); });
        s.name = "log_concave(poly)";
        declare_poly_tails(s, phi, scale);
        return s;
    }
    throw invalid_parameter("unknown model family: " + family);
}

} // namespace qstab
