#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "qstab/measure.hpp"

namespace qstab {

// A target function with declared metadata. Norms are declared, not
// inferred: `f_inf`/`f_sup` bound the range over I, `lip` bounds |f'|.
struct Target {
    std::string name;
    std::function<double(double)> f;
    std::function<double(double)> f_prime; // may be empty for bounded-only targets
    bool bounded = false;
    double f_inf = 0.0, f_sup = 0.0;
    bool lipschitz = false;
    double lip = 0.0;
    // Points where f' jumps; the Simpson residual probe skips panels that
    // contain one (its smoothness assumption fails there, the solution is fine).
    std::vector<double> kinks;
};

std::vector<Target> bounded_target_family();   // 10 targets
std::vector<Target> lipschitz_target_family(); // 10 targets

// Solution of h psi' - (x/C_P) psi = f - mu*(f). psi comes from the explicit
// integral representations (tail-side integral on each side of 0), psi' from
// the equation itself. residual_max is an independent Simpson consistency
// defect stated in equation units (h dpsi - ...), and cross_agreement is the
// max gap between the two representations on |x| <= 1.
struct SteinSolution {
    Target target;
    double mu_f = 0.0;
    double sup_norm = 0.0; // ||f - mu*(f)||_inf from declared range (bounded targets)
    std::vector<double> psi;
    std::vector<double> psi_prime;
    double residual_max = 0.0;
    double cross_agreement = 0.0;
};

// Shared midpoint tables for the residual check; build once per measure and
// reuse across targets.
struct SteinWorkspace {
    const QuotientMeasure* m = nullptr;
    std::vector<double> x_mid, v_mid, h_mid;        // per panel
    std::vector<double> half_x, half_w;             // K15 over left half-panels
    std::vector<std::size_t> half_begin;            // per panel offsets
};

SteinWorkspace make_stein_workspace(const QuotientMeasure& m);

SteinSolution solve_stein(const SteinWorkspace& ws, const Target& target);
SteinSolution solve_stein(const QuotientMeasure& m, const Target& target);

// Lipschitz rewriting: psi from the q/(1-q) kernel form, h psi' from its
// two-term derivative expression; agrees with solve_stein on the grid.
SteinSolution rewrite_lipschitz(const SteinWorkspace& ws, const Target& target);

struct BoundReport {
    bool ok = false;
    double tightest_rel_slack = kInf;
    std::size_t checked = 0;
    std::string detail;
};

// ||psi|| <= Z max(q0, 1-q0) ||f - mu f|| and ||x psi|| <= C_P ||f - mu f||.
BoundReport check_sup_bounds(const QuotientMeasure& m, const SteinSolution& sol);

// ||psi'|| <= (2/kappa)||f - mu f|| and ||h psi'^2|| <= (4/kappa)||f - mu f||^2.
BoundReport check_elliptic_bounds(const QuotientMeasure& m, const SteinSolution& sol,
                                  double kappa);

struct ChBreakdown {
    std::vector<double> a1, a2;
    std::vector<double> sqrt_gamma_a1, sqrt_gamma_a2;
    std::vector<double> left_integral, right_integral; // int_a^x q, int_x^b 1-q
    std::vector<double> objective;
    double c_h = 0.0;
    bool finite = true;
    std::vector<double> extension_sups; // sup under domain-extension doublings
};

struct ChOptions {
    bool check_extension = true; // 3 truncation doublings, >5% growth each => infinite
    ExecMode mode = ExecMode::OpenMP;
};

ChBreakdown compute_ch(const QuotientMeasure& m, const ChOptions& opt = {});

// ||sqrt(h) psi'|| <= C_h ||f'|| nodewise.
BoundReport check_lipschitz_bound(const QuotientMeasure& m, const SteinSolution& sol,
                                  const ChBreakdown& ch);

// int S_mu(psi) dmu* with psi interpolated between nodes; vanishes for
// solutions by the exact integration by parts.
double stein_operator_integral(const QuotientMeasure& m, const SteinSolution& sol);

// Columnar dump: node, a1, a2, sqrt gamma a1, sqrt gamma a2, objective.
void dump_ch_columns(const QuotientMeasure& m, const ChBreakdown& ch, std::ostream& os);

} // namespace qstab
