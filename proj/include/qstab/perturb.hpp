#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qstab/measure.hpp"
#include "qstab/spectral.hpp"

namespace qstab {

// A relative density perturbation p, mu*-orthogonal to span{1, x, x^2, h}.
// nu* = rho (1 + eps p) then keeps zero mean, unit second moment, and
// int h dnu* = lambda for every |eps| <= eps_max.
struct PerturbationDirection {
    std::string label;
    std::function<double(double)> p; // pointwise evaluator (projected)
    std::vector<double> p_values;    // at grid nodes
    double constraints_residual[4] = {0, 0, 0, 0}; // int p, xp, x^2 p, hp dmu*
    double eps_max = 0.0;
    bool nonneg_eps_only = false; // set when int h p < 0 strictly
};

struct PerturbedMeasure {
    const QuotientMeasure* base = nullptr;
    PerturbationDirection direction;
    double eps = 0.0;
    std::vector<double> density; // rho (1 + eps p) at nodes
    std::vector<double> cdf;     // nu* cdf at nodes
    std::vector<double> ccdf;
    double c_p_sharp = 0.0; // sharp quotient constant of nu* (spectral)
    double lambda_nu = 0.0;
    double delta = 0.0;     // lambda_mu - lambda_nu = (C_P(nu)-C_P(mu))/(C_P C_P)
    double mass = 0.0;

    std::function<double(double)> tilt() const; // x -> 1 + eps p(x)
};

// Project p_raw onto the orthogonal complement of span{1, x, x^2, h} in
// L^2(mu*); eps_max = 0.95 / max(|min p|, |max p|) over the grid. Throws
// degenerate_direction when p_raw lies in the constraint span.
PerturbationDirection project_direction(const QuotientMeasure& m,
                                        const std::function<double(double)>& p_raw,
                                        const std::string& label,
                                        ExecMode mode = ExecMode::OpenMP);

// Named direction library for the harness configuration.
std::vector<std::string> direction_library();
PerturbationDirection make_direction(const QuotientMeasure& m, const std::string& name,
                                     ExecMode mode = ExecMode::OpenMP);

PerturbedMeasure make_perturbed(const QuotientMeasure& m,
                                const PerturbationDirection& dir, double eps,
                                const SpectralOptions& sopt = {});

struct ApproxIppReport {
    bool ok = false;
    double lhs_core = 0.0;      // |int (h psi' - x/C_P(nu) psi) dnu*|
    double rhs_core = 0.0;      // sqrt(delta) (int h psi'^2 dnu*)^(1/2)
    double lhs_assembled = 0.0; // |int S_mu(psi) dnu*|
    double rhs_assembled = 0.0; // (sqrt(delta)+sqrt(C_P(nu)) delta)(...)^(1/2)
    std::string detail;
};

// Approximate integration by parts for nu*, with the sharp quotient constant
// in the role of C_P(nu), plus the assembled Stein-operator form.
ApproxIppReport verify_approx_ipp(const PerturbedMeasure& nu,
                                  const std::function<double(double)>& psi,
                                  const std::function<double(double)>& psi_prime,
                                  ExecMode mode = ExecMode::OpenMP);

} // namespace qstab
