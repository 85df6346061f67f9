#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "qstab/measure.hpp"

using namespace qstab;

namespace {

MeasureBuildOptions small(std::size_t n = 512) {
    MeasureBuildOptions o;
    o.n = n;
    return o;
}

} // namespace

TEST_CASE("compute_v closed forms") {
    Tolerances tol;
    DiffusionSpec g = make_gaussian(1.0);
    CHECK(compute_v(g, 0.0, tol) == 1.0);
    CHECK(compute_v(g, 1.0, tol) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

    // gamma(1,1): v(t) = (1-t) e^t by the antiderivative u/(1-u) = -1 + 1/(1-u)
    DiffusionSpec gam = make_gamma(1.0, 1.0);
    CHECK(compute_v(gam, -1.0, tol) == doctest::Approx(2.0 / M_E).epsilon(1e-12));
    CHECK(compute_v(gam, 0.5, tol) == doctest::Approx(0.5 * std::exp(0.5)).epsilon(1e-12));

    // sphere(2): v = 1 - t^2/3
    DiffusionSpec sph = make_sphere(2);
    CHECK(compute_v(sph, 1.0, tol) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("gaussian measure: Z, density, moments") {
    QuotientMeasure m = build_measure(make_gaussian(1.0), small());
    CHECK(m.Z == doctest::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-11));
    CHECK(std::fabs(m.m1) < 1e-10);
    CHECK(m.m2 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m.mh == doctest::Approx(1.0).epsilon(1e-10));
    REQUIRE(m.closed_form_max_rel_dev.has_value());
    CHECK(*m.closed_form_max_rel_dev < 1e-10);
    CHECK(m.density_sup == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-9));
    // second moment via the public integrator
    CHECK(m.integrate([](double x) { return x * x; }) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gamma(1,1) measure: density e^{x-1}, Z = e") {
    QuotientMeasure m = build_measure(make_gamma(1.0, 1.0), small());
    CHECK(m.Z == doctest::Approx(M_E).epsilon(1e-11));
    CHECK(std::fabs(m.m1) < 1e-10);
    CHECK(m.m2 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m.mh == doctest::Approx(1.0).epsilon(1e-10));
    REQUIRE(m.closed_form_max_rel_dev.has_value());
    CHECK(*m.closed_form_max_rel_dev < 1e-10);
    CHECK(m.density_sup == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sphere measures: flat density at d=2, singular ends at d=1") {
    QuotientMeasure m2 = build_measure(make_sphere(2), small());
    CHECK(std::fabs(m2.m1) < 1e-10);
    CHECK(m2.m2 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m2.mh == doctest::Approx(2.0).epsilon(1e-10));
    REQUIRE(m2.closed_form_max_rel_dev.has_value());
    CHECK(*m2.closed_form_max_rel_dev < 1e-10);
    // Prop-2.6 normalizer of v/h (the density-display normalizer is 2 sqrt 3)
    CHECK(m2.Z == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-10));

    QuotientMeasure m1 = build_measure(make_sphere(1), small());
    CHECK(std::fabs(m1.m1) < 1e-9);
    CHECK(m1.m2 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m1.mh == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::isinf(m1.density_sup)); // arcsine-type endpoint blowup
}

TEST_CASE("quartic measure moments") {
    QuotientMeasure m = build_measure(make_quartic(), small());
    CHECK(std::fabs(m.m1) < 1e-9);
    CHECK(m.m2 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.mh == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("grid doubling moves Z and moments by less than 1e-8 relative") {
    for (auto spec : {make_gaussian(1.0), make_gamma(0.5, 2.0), make_sphere(3)}) {
        QuotientMeasure c = build_measure(spec, small(256));
        QuotientMeasure f = build_measure(spec, small(512));
        CHECK(std::fabs(c.Z - f.Z) / f.Z < 1e-8);
        CHECK(std::fabs(c.m2 - f.m2) < 1e-8);
        CHECK(std::fabs(c.mh - f.mh) / f.mh < 1e-8);
    }
}

TEST_CASE("cdf endpoints and monotonicity") {
    QuotientMeasure m = build_measure(make_gamma(2.0, 0.5), small());
    CHECK(m.cdf.front() < 1e-11);
    CHECK(m.ccdf.back() < 1e-4); // linear edge keeps a representability sliver
    for (std::size_t i = 1; i < m.cdf.size(); ++i) CHECK(m.cdf[i] >= m.cdf[i - 1]);
    for (std::size_t i = 0; i < m.cdf.size(); ++i)
        CHECK(m.cdf[i] + m.ccdf[i] == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("tail bounds hold on the catalog lattice") {
    for (auto spec : {make_gaussian(1.0), make_gamma(1.0, 1.0), make_gamma(5.0, 1.0),
                      make_sphere(1), make_sphere(10), make_quartic()}) {
        QuotientMeasure m = build_measure(spec, small(256));
        TailBoundReport rep = verify_tail_bounds(m);
        CHECK(rep.ok);
        CHECK(rep.checked > 100);
    }
}

TEST_CASE("tail bound closed forms at sample points (gaussian, gamma)") {
    // gaussian t=-2: q(t) <= min(1/2, -1/(Z t)) v(t)
    QuotientMeasure g = build_measure(make_gaussian(1.0), small());
    const double t = -2.0;
    const double q = g.q_spline(t);
    const double rhs = std::min(0.5, -1.0 / (g.Z * t)) * compute_v(g.spec, t);
    CHECK(q <= rhs);
    CHECK(q == doctest::Approx(0.5 * std::erfc(2.0 / std::sqrt(2.0))).epsilon(1e-6));

    // gamma(1,1) at t=0.5: 1-q = 1-e^{t-1}
    QuotientMeasure gm = build_measure(make_gamma(1.0, 1.0), small());
    const double one_minus_q = 1.0 - gm.q_spline(0.5);
    CHECK(one_minus_q == doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-8));
    const double rhs2 = std::min(1.0 - std::exp(-1.0), 1.0 / (gm.Z * 0.5)) *
                        compute_v(gm.spec, 0.5);
    CHECK(one_minus_q <= rhs2);
}

TEST_CASE("g minorization holds on the catalog lattice") {
    for (auto spec : {make_gaussian(1.0), make_gamma(1.0, 1.0), make_gamma(0.5, 2.0),
                      make_sphere(2), make_sphere(3), make_quartic()}) {
        QuotientMeasure m = build_measure(spec, small(256));
        MinorizationReport rep = verify_g_minorization(m);
        CHECK(rep.ok);
        CHECK(rep.checked > 0);
    }
}

TEST_CASE("gaussian admits the classical g(x) = x^2/(1+x^2) minorant") {
    QuotientMeasure m = build_measure(make_gaussian(1.0), small());
    for (std::size_t i = 0; i < m.grid.size(); ++i) {
        const double x = m.grid.x[i];
        if (std::fabs(x) < 1e-3) continue;
        const double gg = x * x / (1.0 + x * x);
        if (x < 0.0)
            CHECK(m.cdf[i] >= (1.0 / m.Z) * m.v_nodes[i] * gg / (-x) * (1.0 - 1e-9));
        else
            CHECK(m.ccdf[i] >= (1.0 / m.Z) * m.v_nodes[i] * gg / x * (1.0 - 1e-9));
    }
}

TEST_CASE("exact integration by parts residual vanishes on a 10-psi family") {
    using F = std::function<double(double)>;
    std::vector<std::pair<F, F>> family = {
        {[](double) { return 1.0; }, [](double) { return 0.0; }},
        {[](double x) { return x; }, [](double) { return 1.0; }},
        {[](double x) { return x * x; }, [](double x) { return 2.0 * x; }},
        {[](double x) { return x * x * x; }, [](double x) { return 3.0 * x * x; }},
        {[](double x) { return std::pow(x, 4); }, [](double x) { return 4.0 * x * x * x; }},
        {[](double x) { return std::exp(-x * x); },
         [](double x) { return -2.0 * x * std::exp(-x * x); }},
        {[](double x) { return std::exp(-sq(x - 1.0)); },
         [](double x) { return -2.0 * (x - 1.0) * std::exp(-sq(x - 1.0)); }},
        {[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }},
        {[](double x) { return std::tanh(x); },
         [](double x) { return 1.0 / sq(std::cosh(x)); }},
        {[](double x) { return x * std::exp(-0.5 * x * x); },
         [](double x) { return (1.0 - x * x) * std::exp(-0.5 * x * x); }},
    };
    for (auto spec : {make_gaussian(1.0), make_gamma(1.0, 1.0), make_gamma(2.0, 0.5),
                      make_gamma(0.5, 2.0), make_gamma(5.0, 1.0), make_sphere(1),
                      make_sphere(2), make_sphere(3), make_sphere(10), make_quartic()}) {
        QuotientMeasure m = build_measure(spec, small());
        for (auto& [psi, dpsi] : family)
            CHECK(std::fabs(exact_ipp_residual(m, psi, dpsi)) < 1e-8);
    }
}

TEST_CASE("compute_v rejects points outside the open interval") {
    Tolerances tol;
    DiffusionSpec g = make_gamma(1.0, 1.0);
    CHECK_THROWS_AS(compute_v(g, 1.0, tol), invalid_parameter);  // at b
    CHECK_THROWS_AS(compute_v(g, 2.0, tol), invalid_parameter);  // beyond b
    DiffusionSpec s = make_sphere(2);
    CHECK_THROWS_AS(compute_v(s, -2.0, tol), invalid_parameter); // below a
}

TEST_CASE("columnar dump shape") {
    QuotientMeasure m = build_measure(make_gaussian(1.0), small(128));
    std::ostringstream os;
    dump_measure_columns(m, os);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    CHECK(header == "node\tv\tdensity\tcdf");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == m.grid.size());
}
