// Acceptance suite: runs every gate criterion at its pinned tolerance and
// prints one pass/fail line per criterion. Exit status is the failure count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "qstab/harness.hpp"
#include "qstab/spectral.hpp"
#include "qstab/stein.hpp"

using namespace qstab;
using clock_type = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int num, const char* name, bool pass, double seconds,
            const std::string& note = "") {
    std::printf("criterion %2d [%-28s] %s (%.1f s)%s%s\n", num, name,
                pass ? "PASS" : "FAIL", seconds, note.empty() ? "" : " -- ",
                note.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

struct CatalogEntry {
    std::string label;
    DiffusionSpec spec;
};

std::vector<CatalogEntry> catalog() {
    return {
        {"gaussian(1)", make_gaussian(1.0)},
        {"gamma(1,1)", make_gamma(1.0, 1.0)},
        {"gamma(2,0.5)", make_gamma(2.0, 0.5)},
        {"gamma(0.5,2)", make_gamma(0.5, 2.0)},
        {"gamma(5,1)", make_gamma(5.0, 1.0)},
        {"sphere(1)", make_sphere(1)},
        {"sphere(2)", make_sphere(2)},
        {"sphere(3)", make_sphere(3)},
        {"sphere(10)", make_sphere(10)},
        {"quartic", make_quartic()},
    };
}

QuotientMeasure build4096(const DiffusionSpec& spec) {
    MeasureBuildOptions o;
    o.n = 4096;
    return build_measure(spec, o);
}

double now_minus(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::vector<Target> all_targets() {
    auto t = bounded_target_family();
    auto l = lipschitz_target_family();
    t.insert(t.end(), l.begin(), l.end());
    return t;
}

} // namespace

int main() {
    std::vector<CatalogEntry> models = catalog();
    std::vector<QuotientMeasure> measures;

    // 1. moment identities, < 5 s per model
    {
        auto t0 = clock_type::now();
        bool ok = true;
        std::string note;
        for (const CatalogEntry& c : models) {
            auto tm = clock_type::now();
            measures.push_back(build4096(c.spec));
            const QuotientMeasure& m = measures.back();
            const double dt = now_minus(tm);
            const bool good = std::fabs(m.m1) <= 1e-8 && std::fabs(m.m2 - 1.0) <= 1e-8 &&
                              std::fabs(m.mh - c.spec.lambda_mu) <= 1e-8 && dt < 5.0;
            if (!good && note.empty()) note = "first failure: " + c.label;
            ok = ok && good;
        }
        report(1, "moment identities", ok, now_minus(t0), note);
    }

    // 2. closed-form density oracles at 1e-10 sup-relative
    {
        auto t0 = clock_type::now();
        bool ok = true;
        std::string note;
        for (std::size_t i : {std::size_t(0), std::size_t(1), std::size_t(6)}) {
            const QuotientMeasure& m = measures[i];
            if (!m.closed_form_max_rel_dev || *m.closed_form_max_rel_dev > 1e-10) {
                ok = false;
                if (note.empty())
                    note = models[i].label + " dev " +
                           std::to_string(m.closed_form_max_rel_dev.value_or(-1.0));
            }
        }
        report(2, "closed-form oracles", ok, now_minus(t0), note);
    }

    // 3. spectral gaps at grid 4096, < 30 s per model
    {
        auto t0 = clock_type::now();
        bool ok = true;
        std::string note;
        for (std::size_t i = 0; i < models.size(); ++i) {
            auto tm = clock_type::now();
            SpectralResult r =
                spectral_gap_weighted(measures[i], [](double) { return 1.0; });
            const double dt = now_minus(tm);
            const double expect = models[i].spec.lambda_mu;
            bool good = std::fabs(r.lambda1 - expect) <= 1e-3 && dt < 30.0;
            // nu-weighted correlation of the eigenfunction with Id
            {
                const QuotientMeasure& m = measures[i];
                Pchip ef(m.grid.x, r.eigenfunction);
                double wx = 0, wp = 0, wxx = 0, wpp = 0, wxp = 0, mass = 0;
                for (std::size_t k = 0; k < m.table.size(); ++k) {
                    const double x = m.table.x[k], w = m.table.weight[k];
                    const double p = ef(x);
                    mass += w;
                    wx += w * x;
                    wp += w * p;
                    wxx += w * x * x;
                    wpp += w * p * p;
                    wxp += w * x * p;
                }
                wx /= mass;
                wp /= mass;
                wxx /= mass;
                wpp /= mass;
                wxp /= mass;
                const double corr = (wxp - wx * wp) /
                                    std::sqrt((wxx - wx * wx) * (wpp - wp * wp));
                good = good && corr >= 0.999;
            }
            if (!good && note.empty()) note = "first failure: " + models[i].label;
            ok = ok && good;
        }
        report(3, "spectral gaps", ok, now_minus(t0), note);
    }

    // 4. Stein residual + representation agreement; f = Id constant solution
    {
        auto t0 = clock_type::now();
        bool ok = true;
        std::string note;
        auto targets = all_targets();
        for (std::size_t i = 0; i < models.size(); ++i) {
            const QuotientMeasure& m = measures[i];
            SteinWorkspace ws = make_stein_workspace(m);
            for (const Target& t : targets) {
                SteinSolution s = solve_stein(ws, t);
                bool good = s.residual_max <= 1e-6 * (1.0 + s.sup_norm) &&
                            s.cross_agreement <= 1e-7;
                if (t.lipschitz && t.f_prime) {
                    SteinSolution rw = rewrite_lipschitz(ws, t);
                    double dev = 0.0;
                    for (std::size_t k = 0; k < s.psi.size(); ++k)
                        dev = std::max(dev, std::fabs(s.psi[k] - rw.psi[k]));
                    good = good && dev <= 1e-7;
                }
                if (!good && note.empty())
                    note = "first failure: " + models[i].label + " / " + t.name;
                ok = ok && good;
            }
            Target id;
            id.name = "id";
            id.f = [](double x) { return x; };
            id.f_prime = [](double) { return 1.0; };
            id.lipschitz = true;
            id.lip = 1.0;
            SteinSolution s = solve_stein(ws, id);
            for (double p : s.psi)
                if (std::fabs(p + m.spec.c_p()) > 1e-8) {
                    if (note.empty()) note = "psi != -C_P on " + models[i].label;
                    ok = false;
                    break;
                }
        }
        report(4, "stein residual + agreement", ok, now_minus(t0), note);
    }

    // 5. bound suites at every node, zero violations
    {
        auto t0 = clock_type::now();
        bool ok = true;
        std::string note;
        for (std::size_t i = 0; i < models.size(); ++i) {
            const QuotientMeasure& m = measures[i];
            SteinWorkspace ws = make_stein_workspace(m);
            ChOptions copt;
            copt.check_extension = false;
            ChBreakdown ch = compute_ch(m, copt);
            try {
                for (const Target& t : all_targets()) {
                    SteinSolution s = solve_stein(ws, t);
                    if (t.bounded) {
                        check_sup_bounds(m, s);
                        if (models[i].label == "gaussian(1)")
                            check_elliptic_bounds(m, s, *m.spec.kappa_analytic);
                    }
                    if (t.lipschitz) check_lipschitz_bound(m, s, ch);
                }
            } catch (const std::exception& e) {
                ok = false;
                if (note.empty()) note = models[i].label + ": " + e.what();
            }
        }
        report(5, "stein bound suites", ok, now_minus(t0), note);
    }

    // 6. tail and minorization suites, zero violations
    {
        auto t0 = clock_type::now();
        bool ok = true;
        std::string note;
        for (std::size_t i = 0; i < models.size(); ++i) {
            try {
                TailBoundReport tb = verify_tail_bounds(measures[i]);
                MinorizationReport mg = verify_g_minorization(measures[i]);
                ok = ok && tb.ok && mg.ok;
            } catch (const std::exception& e) {
                ok = false;
                if (note.empty()) note = models[i].label + ": " + e.what();
            }
        }
        report(6, "tail + minorization suites", ok, now_minus(t0), note);
    }

    // 7/8/9. stability sweeps end-to-end
    std::vector<SweepResult> sweeps;
    std::vector<SweepConfig> sweep_cfgs;
    {
        auto t0 = clock_type::now();
        bool ok = true;
        std::string note;
        struct Base {
            std::string cfg;
        };
        for (const std::string& cfgtext :
             {std::string("family = \"gaussian\"\nc_p = 1\n"),
              std::string("family = \"gamma\"\ns = 1\ntheta = 1\n"),
              std::string("family = \"sphere\"\nd = 2\n"),
              std::string("family = \"quartic\"\n")}) {
            SweepConfig cfg = SweepConfig::from_config(KeyValues::parse(cfgtext));
            cfg.grid_size = 4096;
            cfg.eps_steps = 8;
            cfg.directions = {"cubic", "quintic", "quartic_even", "bump_left",
                              "bump_right"};
            SweepResult r = run_sweep(cfg);
            bool good = r.runtime_seconds < 300.0;
            for (const StabilityRecord& rec : r.records) {
                for (const TheoremCheck& tc : rec.bounds) good = good && tc.holds;
                good = good && rec.approx_ipp_ok;
            }
            // kappa coverage where it exists
            if (cfg.model_label == "gaussian" || cfg.model_label == "quartic")
                good = good && r.kappa_present;
            if (!good && note.empty()) note = "first failure: " + cfg.model_label;
            ok = ok && good;
            sweeps.push_back(std::move(r));
            sweep_cfgs.push_back(cfg);
        }
        report(7, "stability sweeps", ok, now_minus(t0), note);
    }

    // 8. gaussian-base total-variation refinement
    {
        auto t0 = clock_type::now();
        bool ok = true;
        std::string note;
        try {
            UtevReport rep = check_utev_gaussian(sweeps[0]);
            ok = rep.ok && rep.checked > 0;
        } catch (const std::exception& e) {
            ok = false;
            note = e.what();
        }
        report(8, "gaussian tv refinement", ok, now_minus(t0), note);
    }

    // 9. asymptotics along each eps ladder
    {
        auto t0 = clock_type::now();
        bool ok = true;
        std::string note;
        for (std::size_t s = 0; s < sweeps.size(); ++s) {
            const SweepResult& r = sweeps[s];
            for (const std::string& d : sweep_cfgs[s].directions) {
                std::vector<double> es, ds, w1s, ratios;
                for (const StabilityRecord& rec : r.records) {
                    if (rec.direction != d) continue;
                    es.push_back(rec.eps);
                    ds.push_back(rec.delta);
                    w1s.push_back(rec.distances.w1);
                    for (const TheoremCheck& tc : rec.bounds)
                        if (tc.id == "w1_ch" && tc.applicable && rec.eps > 0.0)
                            ratios.push_back(tc.ratio);
                }
                bool good = std::fabs(ds.front()) < 1e-6 && w1s.front() < 1e-9;
                for (double rt : ratios) good = good && rt <= 1.0 + 1e-6;
                // quadratic fit of delta over the ladder, residual < 10%
                double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
                for (std::size_t k = 1; k < es.size(); ++k) {
                    const double e2 = es[k] * es[k], e3 = e2 * es[k];
                    a11 += e2 * e2;
                    a12 += e2 * e3;
                    a22 += e3 * e3;
                    b1 += e2 * ds[k];
                    b2 += e3 * ds[k];
                }
                const double det = a11 * a22 - a12 * a12;
                const double c2 = (b1 * a22 - b2 * a12) / det;
                const double c3 = (a11 * b2 - a12 * b1) / det;
                double ss = 0.0, ref = 0.0;
                for (std::size_t k = 1; k < es.size(); ++k) {
                    const double fit = c2 * es[k] * es[k] + c3 * es[k] * es[k] * es[k];
                    ss += sq(ds[k] - fit);
                    ref += sq(ds[k]);
                }
                good = good && (ref == 0.0 || std::sqrt(ss / ref) < 0.10);
                if (!good && note.empty())
                    note = "first failure: " + r.model_label + " / " + d;
                ok = ok && good;
            }
        }
        report(9, "eps-ladder asymptotics", ok, now_minus(t0), note);
    }

    // 10. determinism: identical config, byte-identical report
    {
        auto t0 = clock_type::now();
        SweepConfig cfg = SweepConfig::from_config(
            KeyValues::parse("family = \"gamma\"\ns = 1\ntheta = 1\n"));
        cfg.grid_size = 1024;
        cfg.eps_steps = 4;
        cfg.directions = {"cubic", "bump_right"};
        const std::string a = report_json(run_sweep(cfg), cfg);
        const std::string b = report_json(run_sweep(cfg), cfg);
        SweepConfig serial = cfg;
        serial.mode = ExecMode::Serial;
        const std::string c = report_json(run_sweep(serial), serial);
        report(10, "determinism", a == b && a == c, now_minus(t0));
    }

    if (g_failures == 0) std::printf("acceptance: all criteria pass\n");
    else std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return g_failures;
}
