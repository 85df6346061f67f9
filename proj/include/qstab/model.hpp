#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qstab/common.hpp"

namespace qstab {

struct Grid; // grid.hpp

// Exact local form of h near a finite endpoint where h vanishes linearly.
// Evaluating h(x) through x = edge -+ w loses all digits once w is tiny, so
// near-edge code works in the distance coordinate w instead.
struct EdgeModel {
    double gamma_c = 0.0; // v ~ w^{gamma_c}; equals lambda_mu*|edge|/h'(edge)
    std::function<double(double)> h_of_w;
};

// Declared endpoint behavior. Each catalog model ships its growth constants
// explicitly; check_assumptions verifies them instead of inferring them
// (inference from samples is ill-posed).
//   infinite end:  c1*|t|^{2*alpha-2} <= h(t) <= c2*|t|^alpha   for |t| >= neighborhood
//   finite end:    c1*w^alpha        <= h(t) <= c2*w^alpha      for w = dist(t, edge) <= neighborhood
struct EndpointBehavior {
    bool finite = false;
    double alpha = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double neighborhood = 1.0;
    std::optional<EdgeModel> edge; // required when finite and alpha == 1
};

// A quotient diffusion: the triple (I, h, lambda_mu) plus declared endpoint
// metadata. Immutable after construction; safe to share across threads.
struct DiffusionSpec {
    std::string name;
    double a = -kInf; // inf I, a < 0
    double b = kInf;  // sup I, b > 0
    std::function<double(double)> h;
    double lambda_mu = 0.0;
    EndpointBehavior left, right;
    std::function<double(double)> closed_form_density; // optional oracle
    // Edge-stable oracle form: density as a function of (side dir, distance w).
    // Needed when closed_form_density(x) would cancel catastrophically near a
    // finite endpoint.
    std::function<double(int, double)> closed_form_density_edge;
    std::optional<double> kappa_analytic;              // exact inf h when known

    double c_p() const { return 1.0 / lambda_mu; }
};

struct AssumptionReport {
    bool positivity_ok = false;
    std::optional<double> ellipticity_kappa;
    bool growth_ok_at_a = false;
    bool growth_ok_at_b = false;
    std::vector<std::string> details;

    // Sufficient conditions for a finite C_h read off the declared exponents
    // together with the verified growth flags: infinite ends need alpha <= 2,
    // finite ends 1 <= alpha <= 2. Sufficient only; the operational probe in
    // compute_ch has the final word.
    bool ch_finite_expected = false;
};

// --- catalog -----------------------------------------------------------

DiffusionSpec make_gaussian(double c_p);
DiffusionSpec make_gamma(double s, double theta);
DiffusionSpec make_sphere(int d);

// Brascamp-Lieb quotient for a strictly convex C^2 potential. h is the
// literal phi'' o phi'^{-1} (lambda_mu = 1); the eigenfunction scale sigma
// divides phi' so that callers can pass sigma = sqrt(int phi'^2 dmu) to
// obtain the variance-normalized pushforward.
DiffusionSpec make_log_concave(std::function<double(double)> phi_prime,
                               std::function<double(double)> phi_second,
                               double dom_lo, double dom_hi, double f0_scale = 1.0,
                               std::function<double(double)> phi = nullptr);

// Normalized quartic-plus-quadratic potential phi = x^4/4 + x^2/2. Strictly
// convex, so Assumption 3 holds (the pure quartic has phi''(0) = 0 and is
// rejected by make_log_concave).
DiffusionSpec make_quartic();

// sigma^2 = int phi'^2 e^{-phi} / int e^{-phi} over the (possibly infinite)
// domain; the f0_scale that makes the pushforward have unit variance.
double log_concave_normalizer(const std::function<double(double)>& phi,
                              const std::function<double(double)>& phi_prime,
                              double dom_lo, double dom_hi);

// Simple dense polynomial, used for config-supplied potentials.
struct Poly {
    std::vector<double> c; // c[k] x^k
    double operator()(double x) const;
    Poly derivative() const;
};

// Build a model from key=value config entries (family plus parameters).
struct KeyValues; // config.hpp
DiffusionSpec model_from_config(const KeyValues& kv);

AssumptionReport check_assumptions(const DiffusionSpec& spec, const Grid& grid);

} // namespace qstab
