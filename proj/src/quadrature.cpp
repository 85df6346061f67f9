#include "qstab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace qstab {

// Abscissae/weights from the QUADPACK dqk15 tables.
const std::array<double, 15> GK15::nodes = {
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329};

const std::array<double, 15> GK15::wk = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970};

const std::array<double, 8> GK15::wg = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327, // center
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082};

PanelEstimate gk15_panel(const std::function<double(double)>& f, double lo, double hi) {
    const double c = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    double k = 0.0, g = 0.0;
    for (int i = 0; i < 15; ++i) {
        const double y = f(c + half * GK15::nodes[i]);
        k += GK15::wk[i] * y;
        if (i % 2 == 1) g += GK15::wg[(i - 1) / 2] * y;
    }
    k *= half;
    g *= half;
    PanelEstimate est;
    est.value = k;
    const double diff = std::fabs(k - g);
    // QUADPACK-style sharpened estimate: (200*diff)^1.5, capped by diff.
    est.error = diff * std::min(1.0, std::pow(200.0 * diff, 0.5));
    if (!std::isfinite(est.error)) est.error = kInf;
    return est;
}

namespace {

struct Panel {
    double lo, hi;
    PanelEstimate est;
};

} // namespace

QuadResult integrate_adaptive(const std::function<double(double)>& f, double lo,
                              double hi, const QuadOptions& opt) {
    QuadResult res;
    if (lo == hi) return res;
    std::vector<Panel> heap;
    heap.push_back({lo, hi, gk15_panel(f, lo, hi)});
    auto cmp = [](const Panel& a, const Panel& b) { return a.est.error < b.est.error; };
    std::make_heap(heap.begin(), heap.end(), cmp);
    const std::size_t max_panels = std::size_t(1) << opt.max_depth;

    auto totals = [&heap](double& v, double& e) {
        v = 0.0;
        e = 0.0;
        for (const Panel& p : heap) {
            v += p.est.value;
            e += p.est.error;
        }
    };

    double value, err;
    totals(value, err);
    while (err > std::max(opt.abs_tol, opt.rel_tol * std::fabs(value)) &&
           heap.size() < max_panels) {
        std::pop_heap(heap.begin(), heap.end(), cmp);
        Panel worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (mid <= worst.lo || mid >= worst.hi) { // interval at rounding floor
            heap.push_back(worst);
            std::push_heap(heap.begin(), heap.end(), cmp);
            break;
        }
        Panel l{worst.lo, mid, gk15_panel(f, worst.lo, mid)};
        Panel r{mid, worst.hi, gk15_panel(f, mid, worst.hi)};
        heap.push_back(l);
        std::push_heap(heap.begin(), heap.end(), cmp);
        heap.push_back(r);
        std::push_heap(heap.begin(), heap.end(), cmp);
        totals(value, err);
    }
    res.value = value;
    res.error = err;
    res.panels = static_cast<int>(heap.size());
    res.converged = err <= std::max(opt.abs_tol, opt.rel_tol * std::fabs(value));
    return res;
}

double integrate_checked(const std::function<double(double)>& f, double lo,
                         double hi, const QuadOptions& opt) {
    QuadResult r = integrate_adaptive(f, lo, hi, opt);
    if (!r.converged)
        throw numerical_failure("adaptive quadrature did not converge: err=" +
                                std::to_string(r.error) + " over [" + std::to_string(lo) +
                                "," + std::to_string(hi) + "]");
    return r.value;
}

double integrate_tail(const std::function<double(double)>& f, double lo, int dir,
                      double first_width, double scale, const QuadOptions& opt) {
    double total = 0.0;
    double width = first_width;
    double edge = lo;
    for (int k = 0; k < 200; ++k) {
        const double next = edge + dir * width;
        QuadResult r = dir > 0 ? integrate_adaptive(f, edge, next, opt)
                               : integrate_adaptive(f, next, edge, opt);
        total += r.value;
        edge = next;
        width *= 2.0;
        if (std::fabs(r.value) < 1e-4 * std::max(opt.abs_tol, opt.rel_tol * scale)) break;
    }
    return total;
}

void gk15_weighted_multi(const std::function<double(double)>& weight,
                         const std::vector<std::function<double(double)>>& fs,
                         double lo, double hi, std::vector<double>& out) {
    const double c = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (int i = 0; i < 15; ++i) {
        const double x = c + half * GK15::nodes[i];
        const double w = half * GK15::wk[i] * weight(x);
        for (std::size_t j = 0; j < fs.size(); ++j) out[j] += w * fs[j](x);
    }
}

} // namespace qstab
