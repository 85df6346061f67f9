#include <cmath>

#include "qstab/stein.hpp"

namespace qstab {

namespace {

Target bounded(std::string name, std::function<double(double)> f, double lo, double hi) {
    Target t;
    t.name = std::move(name);
    t.f = std::move(f);
    t.bounded = true;
    t.f_inf = lo;
    t.f_sup = hi;
    return t;
}

Target lip(std::string name, std::function<double(double)> f,
           std::function<double(double)> fp, double L) {
    Target t;
    t.name = std::move(name);
    t.f = std::move(f);
    t.f_prime = std::move(fp);
    t.lipschitz = true;
    t.lip = L;
    return t;
}

} // namespace

std::vector<Target> bounded_target_family() {
    std::vector<Target> v;
    v.push_back(bounded("step_at_0", [](double x) { return 0.5 * (1.0 + std::tanh(x / 0.2)); },
                        0.0, 1.0));
    v.push_back(bounded("step_at_-1",
                        [](double x) { return 0.5 * (1.0 + std::tanh((x + 1.0) / 0.25)); },
                        0.0, 1.0));
    v.push_back(bounded("step_at_+1",
                        [](double x) { return 0.5 * (1.0 + std::tanh((x - 1.0) / 0.3)); },
                        0.0, 1.0));
    v.push_back(bounded("left_indicator", [](double x) { return 0.5 * std::erfc(x / 0.3); },
                        0.0, 1.0));
    {
        Target t = bounded("clamp", [](double x) { return std::clamp(x, -1.0, 1.0); },
                           -1.0, 1.0);
        t.lipschitz = true;
        t.lip = 1.0;
        t.f_prime = [](double x) { return std::fabs(x) < 1.0 ? 1.0 : 0.0; };
        t.kinks = {-1.0, 1.0};
        v.push_back(t);
    }
    {
        Target t = bounded("sin", [](double x) { return std::sin(x); }, -1.0, 1.0);
        t.lipschitz = true;
        t.lip = 1.0;
        t.f_prime = [](double x) { return std::cos(x); };
        v.push_back(t);
    }
    v.push_back(bounded("cos2x", [](double x) { return std::cos(2.0 * x); }, -1.0, 1.0));
    v.push_back(bounded("gauss_bump", [](double x) { return std::exp(-x * x); }, 0.0, 1.0));
    v.push_back(bounded("witch", [](double x) { return x / (1.0 + x * x); }, -0.5, 0.5));
    {
        Target t = bounded("atan", [](double x) { return std::atan(x); }, -M_PI_2, M_PI_2);
        t.lipschitz = true;
        t.lip = 1.0;
        t.f_prime = [](double x) { return 1.0 / (1.0 + x * x); };
        v.push_back(t);
    }
    return v;
}

std::vector<Target> lipschitz_target_family() {
    std::vector<Target> v;
    v.push_back(lip("id", [](double x) { return x; }, [](double) { return 1.0; }, 1.0));
    v.push_back(lip("half_id", [](double x) { return 0.5 * x; },
                    [](double) { return 0.5; }, 0.5));
    v.push_back(lip("softplus", [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
                    [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, 1.0));
    v.push_back(lip("smooth_abs", [](double x) { return std::sqrt(x * x + 0.1); },
                    [](double x) { return x / std::sqrt(x * x + 0.1); }, 1.0));
    v.push_back(lip("ramp", [](double x) { return 0.2 * x + 0.5 * std::tanh(x); },
                    [](double x) { return 0.2 + 0.5 / sq(std::cosh(x)); }, 0.7));
    {
        Target t = lip("tanh", [](double x) { return std::tanh(x); },
                       [](double x) { return 1.0 / sq(std::cosh(x)); }, 1.0);
        t.bounded = true;
        t.f_inf = -1.0;
        t.f_sup = 1.0;
        v.push_back(t);
    }
    v.push_back(lip("logcosh", [](double x) { return std::fabs(x) > 30.0
                                                          ? std::fabs(x) - M_LN2
                                                          : std::log(std::cosh(x)); },
                    [](double x) { return std::tanh(x); }, 1.0));
    v.push_back(lip("half_sin2x", [](double x) { return 0.5 * std::sin(2.0 * x); },
                    [](double x) { return std::cos(2.0 * x); }, 1.0));
    {
        Target t = lip("atan_lip", [](double x) { return std::atan(x); },
                       [](double x) { return 1.0 / (1.0 + x * x); }, 1.0);
        t.bounded = true;
        t.f_inf = -M_PI_2;
        t.f_sup = M_PI_2;
        v.push_back(t);
    }
    v.push_back(lip("wavy_id", [](double x) { return x + 0.5 * std::sin(x); },
                    [](double x) { return 1.0 + 0.5 * std::cos(x); }, 1.5));
    return v;
}

} // namespace qstab
