#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qstab/common.hpp"
#include "qstab/model.hpp"
#include "qstab/parallel.hpp"

namespace qstab {

// Nodes are laid out in three zones per side of 0:
//   central            uniform in x where the potential Phi = lambda int u/h is small,
//   tail (infinite or  uniform in Phi, i.e. constant density-decay per panel,
//     fast-vanishing end)
//   edge  (finite end, geometric in the edge distance w, tracked exactly in w
//     with h vanishing   so that v, h, rho keep full relative accuracy where
//     linearly)           b - x would lose every digit.
// Mass beyond the outermost nodes (tail completion at truncated ends, the
// power-substituted sliver at linear edges) is carried by extra quadrature
// points so integrals run over all of I even though nodes stay interior.
struct Grid {
    std::vector<double> x;      // strictly increasing interior nodes
    std::vector<double> phi;    // Phi(x_i), Phi(0) = 0
    std::vector<double> edge_w; // distance to the finite edge (NaN outside edge zones)
    double phi_cut = 0.0;       // Phi level used for truncation
    std::string left_transform, right_transform;

    std::size_t size() const { return x.size(); }
};

// One quadrature point of the measure table. `weight` carries the plain
// panel weight times v/h (unnormalized d(mu*)); `plain_w` is the bare dx
// weight for non-weighted integrals.
struct QuadTable {
    std::vector<double> x;
    std::vector<double> weight;
    std::vector<double> plain_w;
    std::vector<double> h;
    std::vector<double> v;
    // panel p (between nodes p and p+1) occupies [panel_begin[p], panel_begin[p+1]).
    // Left sliver points live in [0, panel_begin[0]); right sliver in
    // [panel_begin[npanels], size).
    std::vector<std::size_t> panel_begin;

    std::size_t size() const { return x.size(); }
    std::size_t npanels() const { return panel_begin.empty() ? 0 : panel_begin.size() - 1; }
};

struct GridBuildOptions {
    std::size_t n = 4096;       // requested node count
    double phi_central = 3.0;   // central/tail split level
    double phi_cut = 27.631021115928547; // -log(1e-12)
    double edge_w_floor_scale = 1e-9;    // representability floor for edge distances
};

class MeasureWorkspace; // internal

// Potential increments Phi(x1)-Phi(x0) = lambda int_{x0}^{x1} u/h du,
// edge-aware. Exposed for compute_v and tests.
double phi_increment(const DiffusionSpec& spec, double x0, double x1,
                     const Tolerances& tol);

// Phi(w_lo) - Phi(w_hi) between two edge distances inside a linear edge zone
// (side_dir = -1 for the left end, +1 for the right). Positive: Phi grows
// toward the edge.
double edge_phi_increment(const DiffusionSpec& spec, int side_dir, double w_lo,
                          double w_hi, const Tolerances& tol);

Grid build_grid(const DiffusionSpec& spec, const GridBuildOptions& opt,
                const Tolerances& tol);

QuadTable build_table(const DiffusionSpec& spec, const Grid& grid,
                      const Tolerances& tol, ExecMode mode);

} // namespace qstab
