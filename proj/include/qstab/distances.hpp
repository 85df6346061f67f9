#pragma once

#include <cstdint>
#include <vector>

#include "qstab/common.hpp"
#include "qstab/interp.hpp"

namespace qstab {

struct DistanceTriple {
    double w1 = 0.0;
    double tv = 0.0;
    double kolmogorov = 0.0;
};

// One-dimensional measures enter the distance ops as node/value sequences;
// the monotone interpolants behind them are the actual objects compared.
struct CdfSequence {
    std::vector<double> x;
    std::vector<double> q;
    std::vector<double> slopes; // densities at nodes (optional, may be empty)
};

struct DensitySequence {
    std::vector<double> x;
    std::vector<double> rho;
};

// W1 = int |q1 - q2| on the merged grid (the 1-D identity for the
// Kantorovich-Rubinstein supremum).
double wasserstein1(const CdfSequence& q1, const CdfSequence& q2);

// TV = (1/2) int |rho1 - rho2|; masses must agree within 1e-6.
double total_variation(const DensitySequence& d1, const DensitySequence& d2);

// sup |q1 - q2| over the merged grid, evaluated on the interpolants
// (per-panel cubic extrema, not just nodal samples).
double kolmogorov(const CdfSequence& q1, const CdfSequence& q2);

struct KwReport {
    bool ok = false;
    double lhs = 0.0;
    double rhs = 0.0;
};

// d_K <= 2 sqrt(density_sup * W1) for measures dominated by a bounded density.
KwReport check_kw_comparison(const CdfSequence& q1, const CdfSequence& q2,
                             double density_sup);

struct DualCheckReport {
    bool ok = false;
    double primal = 0.0;
    double worst_dual = 0.0;
    std::uint64_t seed = 0;
    std::size_t functions = 0;
};

// Kantorovich dual sanity: random piecewise-linear 1-Lipschitz functions
// never beat the CDF-identity value (fixed, recorded seed).
DualCheckReport w1_dual_check(const CdfSequence& q1, const CdfSequence& q2,
                              std::uint64_t seed, std::size_t n_functions = 20);

} // namespace qstab
