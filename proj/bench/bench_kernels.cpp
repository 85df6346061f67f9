// Serial-vs-OpenMP comparison for the data-parallel kernels: measure table
// build, moment reduction, FEM assembly + eigensolve, and a miniature sweep.
// The serial path is the reference; outputs must agree bitwise.

#include <chrono>
#include <cstdio>
#include <functional>

#include "qstab/harness.hpp"
#include "qstab/spectral.hpp"

using namespace qstab;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds(clock_type::time_point a, clock_type::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

template <class F>
double timed(const F& f, int reps = 3) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = clock_type::now();
        f();
        best = std::min(best, seconds(t0, clock_type::now()));
    }
    return best;
}

void row(const char* name, double serial, double omp, bool equal) {
    std::printf("%-28s %10.4f s %10.4f s   x%-6.2f %s\n", name, serial, omp,
                serial / omp, equal ? "bit-identical" : "MISMATCH");
}

} // namespace

int main() {
    std::printf("%-28s %12s %12s   %-8s\n", "kernel", "serial", "openmp", "speedup");

    DiffusionSpec spec = make_quartic();
    MeasureBuildOptions mo_serial, mo_omp;
    mo_serial.n = mo_omp.n = 4096;
    mo_serial.mode = ExecMode::Serial;
    mo_omp.mode = ExecMode::OpenMP;

    QuotientMeasure m_serial = build_measure(spec, mo_serial);
    QuotientMeasure m_omp = build_measure(spec, mo_omp);
    {
        const double ts = timed([&] { build_measure(spec, mo_serial); }, 2);
        const double tp = timed([&] { build_measure(spec, mo_omp); }, 2);
        bool eq = m_serial.Z == m_omp.Z && m_serial.m2 == m_omp.m2;
        row("measure table build", ts, tp, eq);
    }
    {
        auto f = [](double x) { return x * x * std::exp(-0.1 * x * x); };
        double vs = 0.0, vp = 0.0;
        const double ts = timed([&] { vs = m_omp.integrate(f, ExecMode::Serial); });
        const double tp = timed([&] { vp = m_omp.integrate(f, ExecMode::OpenMP); });
        row("weighted moment reduction", ts, tp, vs == vp);
    }
    {
        SpectralOptions ss, sp;
        ss.mode = ExecMode::Serial;
        sp.mode = ExecMode::OpenMP;
        auto unit = [](double) { return 1.0; };
        double ls = 0.0, lp = 0.0;
        const double ts = timed([&] { ls = spectral_gap_weighted(m_omp, unit, ss).lambda1; });
        const double tp = timed([&] { lp = spectral_gap_weighted(m_omp, unit, sp).lambda1; });
        row("fem assembly + eigensolve", ts, tp, ls == lp);
    }
    {
        KeyValues kv = KeyValues::parse("family = \"gaussian\"\n");
        SweepConfig cfg = SweepConfig::from_config(kv);
        cfg.grid_size = 512;
        cfg.eps_steps = 3;
        cfg.directions = {"cubic", "bump_right"};
        std::string js, jp;
        SweepConfig cs = cfg, cp = cfg;
        cs.mode = ExecMode::Serial;
        cp.mode = ExecMode::OpenMP;
        const double ts = timed([&] { js = report_json(run_sweep(cs), cs); }, 1);
        const double tp = timed([&] { jp = report_json(run_sweep(cp), cp); }, 1);
        row("miniature sweep", ts, tp, js == jp);
    }
    return 0;
}
