#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qstab/perturb.hpp"

using namespace qstab;

namespace {

QuotientMeasure build(const DiffusionSpec& spec, std::size_t n = 1024) {
    MeasureBuildOptions o;
    o.n = n;
    return build_measure(spec, o);
}

} // namespace

TEST_CASE("projection removes the constraint span") {
    QuotientMeasure m = build(make_gaussian(1.0));
    // x lies in the projected-out span
    CHECK_THROWS_AS(project_direction(m, [](double x) { return x; }, "id"),
                    degenerate_direction);
    CHECK_THROWS_AS(project_direction(
                        m, [](double x) { return 1.0 + 2.0 * x * x; }, "poly"),
                    degenerate_direction);
}

TEST_CASE("gaussian cubic direction is the third Hermite polynomial") {
    QuotientMeasure m = build(make_gaussian(1.0));
    PerturbationDirection d =
        project_direction(m, [](double x) { return x * x * x; }, "cubic");
    // p = x^3 - 3x up to quadrature error (h is constant, so the span is
    // {1, x, x^2} and the x-component of x^3 is E[x^4]/E[x^2] = 3)
    for (double x : {-2.0, -1.0, -0.3, 0.7, 1.9}) {
        CHECK(d.p(x) == doctest::Approx(x * x * x - 3.0 * x).epsilon(1e-8));
    }
    for (double r : d.constraints_residual) CHECK(std::fabs(r) < 1e-9);
}

TEST_CASE("eps_max honors the positivity margin") {
    QuotientMeasure m = build(make_gaussian(1.0));
    PerturbationDirection d =
        project_direction(m, [](double x) { return x * x * x; }, "cubic");
    double pmin = kInf, pmax = -kInf;
    for (double v : d.p_values) {
        pmin = std::min(pmin, v);
        pmax = std::max(pmax, v);
    }
    CHECK(d.eps_max == doctest::Approx(0.95 / std::max(-pmin, pmax)).epsilon(1e-12));
    // 1 + eps p >= 0 across the grid at both extremes of the ladder
    for (double v : d.p_values) {
        CHECK(1.0 + d.eps_max * v >= 0.0);
        CHECK(1.0 - d.eps_max * v >= 0.0);
    }
}

TEST_CASE("direction library projects cleanly on every base model") {
    for (auto spec : {make_gaussian(1.0), make_gamma(1.0, 1.0), make_sphere(2)}) {
        QuotientMeasure m = build(spec, 512);
        for (const std::string& name : direction_library()) {
            PerturbationDirection d = make_direction(m, name);
            CHECK(d.eps_max > 0.0);
            CHECK(std::fabs(d.constraints_residual[0]) < 1e-9);
            CHECK(std::fabs(d.constraints_residual[1]) < 1e-9);
            CHECK(std::fabs(d.constraints_residual[2]) < 1e-9);
            if (name == "relaxed_h")
                CHECK(d.constraints_residual[3] <= 1e-12);
            else
                CHECK(std::fabs(d.constraints_residual[3]) < 1e-9);
        }
    }
}

TEST_CASE("eps = 0 reproduces the base measure with delta = 0") {
    QuotientMeasure m = build(make_gaussian(1.0));
    PerturbationDirection d = make_direction(m, "cubic");
    PerturbedMeasure nu = make_perturbed(m, d, 0.0);
    CHECK(std::fabs(nu.delta) < 1e-6);
    CHECK(nu.mass == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < m.grid.size(); i += 113)
        CHECK(nu.cdf[i] == doctest::Approx(m.cdf[i]).epsilon(1e-12));
}

TEST_CASE("perturbed measures: delta >= 0, c_p monotone, mass 1") {
    for (auto spec : {make_gaussian(1.0), make_gamma(1.0, 1.0)}) {
        QuotientMeasure m = build(spec);
        for (const std::string& name : {std::string("cubic"), std::string("bump_right")}) {
            PerturbationDirection d = make_direction(m, name);
            for (double f : {0.25, 0.5, 1.0}) {
                PerturbedMeasure nu = make_perturbed(m, d, f * d.eps_max);
                CHECK(nu.delta >= -1e-9);
                CHECK(nu.c_p_sharp >= m.spec.c_p() - 1e-6);
                CHECK(nu.mass == doctest::Approx(1.0).epsilon(1e-9));
                for (double rho : nu.density) CHECK(rho >= 0.0);
            }
        }
    }
}

TEST_CASE("delta grows like eps^2 (quadratic sweep fit)") {
    QuotientMeasure m = build(make_gamma(1.0, 1.0));
    PerturbationDirection d = make_direction(m, "bump_right");
    std::vector<double> es, ds;
    for (int i = 1; i <= 6; ++i) {
        const double eps = d.eps_max * i / 6.0;
        PerturbedMeasure nu = make_perturbed(m, d, eps);
        es.push_back(eps);
        ds.push_back(nu.delta);
    }
    // least squares fit delta ~ c2 eps^2 + c3 eps^3; relative residual < 10%
    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
    for (std::size_t i = 0; i < es.size(); ++i) {
        const double e2 = es[i] * es[i], e3 = e2 * es[i];
        a11 += e2 * e2;
        a12 += e2 * e3;
        a22 += e3 * e3;
        b1 += e2 * ds[i];
        b2 += e3 * ds[i];
    }
    const double det = a11 * a22 - a12 * a12;
    const double c2 = (b1 * a22 - b2 * a12) / det;
    const double c3 = (a11 * b2 - a12 * b1) / det;
    double ss = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < es.size(); ++i) {
        const double fit = c2 * es[i] * es[i] + c3 * es[i] * es[i] * es[i];
        ss += sq(ds[i] - fit);
        ref += sq(ds[i]);
    }
    CHECK(std::sqrt(ss / ref) < 0.10);
    CHECK(c2 > 0.0);
}

TEST_CASE("approximate integration by parts across (direction, eps, psi)") {
    std::vector<std::pair<std::function<double(double)>, std::function<double(double)>>>
        psis = {
            {[](double x) { return x; }, [](double) { return 1.0; }},
            {[](double x) { return x * x; }, [](double x) { return 2.0 * x; }},
            {[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }},
            {[](double x) { return std::tanh(x); },
             [](double x) { return 1.0 / sq(std::cosh(x)); }},
            {[](double x) { return std::exp(-x * x); },
             [](double x) { return -2.0 * x * std::exp(-x * x); }},
            {[](double x) { return 1.0 / (1.0 + x * x); },
             [](double x) { return -2.0 * x / sq(1.0 + x * x); }},
            {[](double x) { return std::atan(x); },
             [](double x) { return 1.0 / (1.0 + x * x); }},
            {[](double x) { return x * std::exp(-0.5 * x * x); },
             [](double x) { return (1.0 - x * x) * std::exp(-0.5 * x * x); }},
        };
    QuotientMeasure m = build(make_gaussian(1.0));
    for (const std::string& name : {std::string("cubic"), std::string("quartic_even")}) {
        PerturbationDirection d = make_direction(m, name);
        for (double f : {0.0, 0.5, 1.0}) {
            PerturbedMeasure nu = make_perturbed(m, d, f * d.eps_max);
            for (auto& [psi, dpsi] : psis) {
                ApproxIppReport rep = verify_approx_ipp(nu, psi, dpsi);
                CHECK(rep.ok);
            }
        }
    }
}

TEST_CASE("eps = 0 approximate IPP is the exact IPP") {
    QuotientMeasure m = build(make_gamma(1.0, 1.0));
    PerturbationDirection d = make_direction(m, "cubic");
    PerturbedMeasure nu = make_perturbed(m, d, 0.0);
    ApproxIppReport rep = verify_approx_ipp(nu, [](double x) { return x; },
                                            [](double) { return 1.0; });
    CHECK(rep.lhs_core < 1e-8);
    CHECK(rep.lhs_assembled < 1e-8);
}

TEST_CASE("make_perturbed rejects eps beyond the cap") {
    QuotientMeasure m = build(make_gaussian(1.0), 512);
    PerturbationDirection d = make_direction(m, "cubic");
    CHECK_THROWS_AS(make_perturbed(m, d, 1.5 * d.eps_max), invalid_parameter);
}
