#pragma once

#include <functional>
#include <iosfwd>
#include <optional>

#include "qstab/grid.hpp"
#include "qstab/interp.hpp"
#include "qstab/model.hpp"
#include "qstab/parallel.hpp"

namespace qstab {

struct MeasureBuildOptions {
    std::size_t n = 4096;
    bool check_moments = true;   // assert m1 ~ 0, m2 ~ 1, mh ~ lambda
    double phi_cut = 27.631021115928547;
    ExecMode mode = ExecMode::OpenMP;
};

// The quotient invariant measure on its grid: density v/(Z h), CDF, moments,
// plus the quadrature table every downstream integral reuses. Immutable
// after build.
struct QuotientMeasure {
    DiffusionSpec spec;
    Grid grid;
    QuadTable table;
    Tolerances tol;

    double Z = 0.0;
    std::vector<double> v_nodes;
    std::vector<double> rho_nodes;
    std::vector<double> cdf;  // q at nodes, left sliver included
    std::vector<double> ccdf; // 1 - q accumulated from the right
    double m1 = 0.0, m2 = 0.0, mh = 0.0;
    double density_sup = 0.0; // +inf when a linear edge has gamma_c < 1
    std::optional<double> closed_form_max_rel_dev;
    std::size_t center_index = 0; // node at x = 0

    Pchip q_spline; // monotone CDF interpolant, slopes = rho

    double h_at_node(std::size_t i) const;

    // integral of f against mu*; deterministic for any thread count
    double integrate(const std::function<double(double)>& f,
                     ExecMode mode = ExecMode::OpenMP) const;
    // integral of f against plain dx over the covered range
    double integrate_dx(const std::function<double(double)>& f,
                        ExecMode mode = ExecMode::OpenMP) const;
};

QuotientMeasure build_measure(const DiffusionSpec& spec,
                              const MeasureBuildOptions& opt = {},
                              const Tolerances& tol = {});

// v(t) = exp(-lambda int_0^t u/h) by adaptive quadrature; v(0) = 1 exactly.
double compute_v(const DiffusionSpec& spec, double t, const Tolerances& tol = {});

struct TailBoundReport {
    bool ok = false;
    double worst_rel_slack = kInf; // min over nodes of (rhs-lhs)/rhs
    std::size_t checked = 0;
    std::string detail;
};

// Every node must satisfy q(t) <= min(q(0), -C_P/(Z t)) v(t) on t < 0 and the
// mirrored bound on t > 0. A violation signals a quadrature bug.
TailBoundReport verify_tail_bounds(const QuotientMeasure& m);

struct MinorizationReport {
    bool ok = false;
    double worst_rel_slack = kInf;
    double sup_bound_left = 0.0;  // sup |x (g-1)| / sqrt(h) over checked nodes
    double sup_bound_right = 0.0;
    std::size_t checked = 0;
    std::string detail;
};

// Minorization of the tails by the g1/g2 envelopes built from the declared
// endpoint constants, plus boundedness of x(g-1)/sqrt(h).
MinorizationReport verify_g_minorization(const QuotientMeasure& m);

// int x psi dmu* - C_P int h psi' dmu*; vanishes for mu*.
double exact_ipp_residual(const QuotientMeasure& m,
                          const std::function<double(double)>& psi,
                          const std::function<double(double)>& psi_prime);

// Columnar dump: node, v, density, cdf (tab-separated, headered).
void dump_measure_columns(const QuotientMeasure& m, std::ostream& os);

} // namespace qstab
