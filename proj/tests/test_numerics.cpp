#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qstab/interp.hpp"
#include "qstab/parallel.hpp"
#include "qstab/quadrature.hpp"
#include "qstab/rootfind.hpp"

using namespace qstab;

TEST_CASE("gk15 exact on low-degree polynomials") {
    auto f = [](double x) { return 3.0 * x * x - 2.0 * x + 1.0; };
    PanelEstimate e = gk15_panel(f, -1.0, 2.0);
    // int_{-1}^{2} (3x^2 - 2x + 1) dx = [x^3 - x^2 + x] = (8-4+2)-(-1-1-1) = 9
    CHECK(e.value == doctest::Approx(9.0).epsilon(1e-14));
}

TEST_CASE("adaptive quadrature ties out on known integrals") {
    QuadOptions opt;
    CHECK(integrate_checked([](double x) { return std::exp(-x); }, 0.0, 30.0, opt) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(integrate_checked([](double x) { return x; }, 0.0, 1.0, opt) ==
          doctest::Approx(0.5).epsilon(1e-14));
    // integrable endpoint kink (error estimator is heuristic there)
    CHECK(integrate_checked([](double x) { return std::sqrt(x); }, 0.0, 1.0, opt) ==
          doctest::Approx(2.0 / 3.0).epsilon(3e-9));
}

TEST_CASE("tail continuation captures a gaussian tail") {
    QuadOptions opt;
    auto f = [](double x) { return std::exp(-0.5 * x * x); };
    const double body = integrate_checked(f, -6.0, 6.0, opt);
    const double tails = integrate_tail(f, 6.0, +1, 1.0, body, opt) +
                         integrate_tail(f, -6.0, -1, 1.0, body, opt);
    CHECK(body + tails == doctest::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-13));
}

TEST_CASE("bracketed root solve") {
    auto f = [](double x) { return x * x * x + x; };
    auto df = [](double x) { return 3.0 * x * x + 1.0; };
    double lo, hi;
    expand_bracket(f, 10.0, 0.0, 0.5, -1e300, 1e300, lo, hi);
    const double r = solve_increasing(f, df, 10.0, lo, hi, 1e-14);
    CHECK(f(r) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("pchip preserves monotonicity and hits nodes") {
    std::vector<double> x = {0.0, 1.0, 2.0, 3.5, 4.0};
    std::vector<double> y = {0.0, 0.1, 0.8, 0.95, 1.0};
    Pchip p(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(p(x[i]) == doctest::Approx(y[i]));
    double prev = -1.0;
    for (int i = 0; i <= 400; ++i) {
        const double t = 4.0 * i / 400.0;
        const double v = p(t);
        CHECK(v >= prev - 1e-14);
        prev = v;
    }
}

TEST_CASE("pchip with exact slopes reproduces a smooth cdf closely") {
    std::vector<double> x, y, dy;
    for (int i = 0; i <= 200; ++i) {
        const double t = -4.0 + 8.0 * i / 200.0;
        x.push_back(t);
        y.push_back(0.5 * (1.0 + std::erf(t / std::sqrt(2.0))));
        dy.push_back(std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI));
    }
    Pchip p(x, y, dy);
    for (int i = 0; i <= 100; ++i) {
        const double t = -4.0 + 8.0 * i / 100.0;
        const double ref = 0.5 * (1.0 + std::erf(t / std::sqrt(2.0)));
        CHECK(p(t) == doctest::Approx(ref).epsilon(1e-7));
    }
}

TEST_CASE("parallel kernels match the serial reference bitwise") {
    const std::size_t n = 10000;
    auto body = [](std::size_t i) {
        double x = double(i) * 1e-3;
        return std::sin(x) * std::exp(-x * 0.1);
    };
    const double s_serial = parallel_sum(n, body, ExecMode::Serial);
    const double s_omp = parallel_sum(n, body, ExecMode::OpenMP);
    CHECK(s_serial == s_omp); // identical combine order => identical bits
}
