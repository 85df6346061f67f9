#pragma once

#include <functional>
#include <vector>

#include "qstab/measure.hpp"

namespace qstab {

// Sharp Poincare constant of a probability density on I with carre du champ
// h psi'^2: conforming P1 elements on the measure grid, natural boundary
// conditions, lambda1 = second-smallest eigenvalue of the (K, M) pencil
// (smallest is 0 for constants). Discrete values are variational upper
// bounds, so refinement decreases them.
struct SpectralResult {
    double lambda1 = 0.0;
    double c_p_sharp = 0.0;
    std::vector<double> eigenfunction; // nodal, nu-mean 0, nu-variance 1
    double rayleigh_residual = 0.0;
    std::vector<double> grid_convergence; // coarse-to-fine lambda1 ladder
    double reported_precision = 0.0;      // last-doubling change
};

struct SpectralOptions {
    ExecMode mode = ExecMode::OpenMP;
    bool convergence_ladder = true;
};

// Primary path: the measure's quadrature table reweighted pointwise by
// `tilt` (tilt = 1 gives mu* itself, tilt = 1 + eps p a perturbed measure).
// Exact-form assembly keeps the Id trial function honest, so the result
// never exceeds the true constant's grid ceiling.
SpectralResult spectral_gap_weighted(const QuotientMeasure& m,
                                     const std::function<double(double)>& tilt,
                                     const SpectralOptions& opt = {});

// Sequence input (a dumped density on the grid nodes): interpolates the
// nodal values and assembles against the interpolant.
SpectralResult spectral_gap(const std::vector<double>& density_nodes,
                            const QuotientMeasure& m, const SpectralOptions& opt = {});

// Rayleigh ratio int h psi'^2 dnu / Var_nu(psi) for a differentiable test
// function; always >= lambda1 up to tolerance.
double rayleigh_quotient(const QuotientMeasure& m,
                         const std::function<double(double)>& tilt,
                         const std::function<double(double)>& psi,
                         const std::function<double(double)>& psi_prime,
                         ExecMode mode = ExecMode::OpenMP);

} // namespace qstab
