#include "qstab/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "qstab/grid.hpp"
#include "qstab/spectral.hpp"

namespace qstab {

namespace {

constexpr double kUtevConstant = 38.627416997969522; // 16 (1 + sqrt 2)

double safe_ratio(double actual, double bound) {
    if (bound <= 0.0) return actual <= 1e-9 ? 0.0 : kInf;
    return actual / bound;
}

} // namespace

SweepConfig SweepConfig::from_config(const KeyValues& kv) {
    SweepConfig cfg;
    cfg.model_kv = kv;
    cfg.model_label = kv.get_string("family");
    if (kv.has("directions")) cfg.directions = kv.get_strings("directions");
    cfg.grid_size = std::size_t(kv.get_number("grid_size", 4096.0));
    cfg.eps_steps = std::size_t(kv.get_number("eps_steps", 8.0));
    cfg.seed = std::uint64_t(kv.get_number("seed", 20240811.0));
    cfg.out_dir = kv.get_string("out_dir", "out");
    return cfg;
}

std::vector<std::pair<std::function<double(double)>, std::function<double(double)>>>
ipp_test_family() {
    return {
        {[](double x) { return x; }, [](double) { return 1.0; }},
        {[](double x) { return x * x; }, [](double x) { return 2.0 * x; }},
        {[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }},
        {[](double x) { return std::tanh(x); },
         [](double x) { return 1.0 / sq(std::cosh(x)); }},
        {[](double x) { return std::exp(-x * x); },
         [](double x) { return -2.0 * x * std::exp(-x * x); }},
        {[](double x) { return 1.0 / (1.0 + x * x); },
         [](double x) { return -2.0 * x / sq(1.0 + x * x); }},
        {[](double x) { return std::atan(x); }, [](double x) { return 1.0 / (1.0 + x * x); }},
        {[](double x) { return x * std::exp(-0.5 * x * x); },
         [](double x) { return (1.0 - x * x) * std::exp(-0.5 * x * x); }},
    };
}

SweepResult run_sweep(const SweepConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    DiffusionSpec spec = model_from_config(cfg.model_kv);

    MeasureBuildOptions mo;
    mo.n = cfg.grid_size;
    mo.mode = cfg.mode;
    QuotientMeasure m = build_measure(spec, mo, cfg.tol);

    SweepResult res;
    res.model_label = cfg.model_label;
    res.lambda_mu = spec.lambda_mu;
    res.grid_size = cfg.grid_size;
    res.seed = cfg.seed;
    res.assumptions = check_assumptions(spec, m.grid);
    res.kappa_present = res.assumptions.ellipticity_kappa.has_value();
    res.kappa = res.assumptions.ellipticity_kappa.value_or(0.0);
    res.density_sup = m.density_sup;
    res.gaussian_base =
        cfg.model_label == "gaussian" && std::fabs(spec.lambda_mu - 1.0) < 1e-12;

    ChOptions chopt;
    chopt.mode = cfg.mode;
    ChBreakdown ch = compute_ch(m, chopt);
    res.ch_finite = ch.finite;
    res.c_h = ch.c_h;
    res.ch_extension_sups = ch.extension_sups;

    SpectralOptions sopt;
    sopt.mode = cfg.mode;
    SpectralResult base_gap = spectral_gap_weighted(m, [](double) { return 1.0; }, sopt);
    res.c_p_mu = base_gap.c_p_sharp;

    {
        std::ostringstream os;
        dump_measure_columns(m, os);
        res.measure_dump = os.str();
        std::ostringstream cs;
        dump_ch_columns(m, ch, cs);
        res.ch_profile_dump = cs.str();
        std::ostringstream es;
        es << "node\teigenfunction\n";
        es.precision(17);
        for (std::size_t i = 0; i < m.grid.size(); ++i)
            es << m.grid.x[i] << '\t' << base_gap.eigenfunction[i] << '\n';
        res.eigenfunction_dump = es.str();
    }

    auto psis = ipp_test_family();
    const CdfSequence mu_cdf{m.grid.x, m.cdf, m.rho_nodes};
    const DensitySequence mu_rho{m.grid.x, m.rho_nodes};

    // One slot per (direction, eps); the fan-out is embarrassingly parallel
    // and the merge is deterministic by construction.
    struct Job {
        std::string direction;
        double frac;
    };
    std::vector<double> fracs = cfg.eps_fracs;
    if (fracs.empty())
        for (std::size_t i = 0; i < cfg.eps_steps; ++i)
            fracs.push_back(cfg.eps_steps > 1 ? double(i) / double(cfg.eps_steps - 1) : 0.0);
    std::vector<Job> jobs;
    for (const std::string& d : cfg.directions)
        for (double f : fracs) jobs.push_back({d, f});

    std::vector<PerturbationDirection> dirs;
    for (const std::string& d : cfg.directions) dirs.push_back(make_direction(m, d, cfg.mode));

    std::vector<StabilityRecord> records(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t j) {
        const Job& job = jobs[j];
        const PerturbationDirection* dir = nullptr;
        for (std::size_t k = 0; k < cfg.directions.size(); ++k)
            if (cfg.directions[k] == job.direction) dir = &dirs[k];

        StabilityRecord rec;
        rec.direction = job.direction;
        rec.eps_max = dir->eps_max;
        rec.eps = job.frac * dir->eps_max;
        SpectralOptions inner = sopt;
        inner.mode = ExecMode::Serial; // nested region; outer loop owns the threads
        inner.convergence_ladder = false;
        PerturbedMeasure nu = make_perturbed(m, *dir, rec.eps, inner);
        rec.delta = nu.delta;
        rec.c_p_nu = nu.c_p_sharp;

        CdfSequence nu_cdf{m.grid.x, nu.cdf, nu.density};
        DensitySequence nu_rho{m.grid.x, nu.density};
        rec.distances.w1 = wasserstein1(mu_cdf, nu_cdf);
        rec.distances.tv = total_variation(mu_rho, nu_rho);
        rec.distances.kolmogorov = kolmogorov(mu_cdf, nu_cdf);

        const double delta = std::max(rec.delta, 0.0);
        const double factor = std::sqrt(delta) + std::sqrt(rec.c_p_nu) * delta;

        auto add = [&rec](std::string id, bool applicable, double bound, double actual) {
            TheoremCheck tc;
            tc.id = std::move(id);
            tc.applicable = applicable;
            tc.bound = bound;
            tc.actual = actual;
            tc.ratio = applicable ? safe_ratio(actual, bound) : 0.0;
            tc.holds = !applicable || tc.ratio <= 1.0 + 1e-6;
            rec.bounds.push_back(tc);
        };
        add("w1_ch", res.ch_finite, res.c_h * factor, rec.distances.w1);
        add("tv_kappa", res.kappa_present,
            res.kappa_present ? 4.0 / std::sqrt(res.kappa) * factor : 0.0,
            rec.distances.tv);
        add("kolmogorov_ch", res.ch_finite && std::isfinite(res.density_sup),
            std::isfinite(res.density_sup)
                ? 2.0 * std::sqrt(res.density_sup * res.c_h) * std::sqrt(factor)
                : 0.0,
            rec.distances.kolmogorov);
        add("kolmogorov_kappa", res.kappa_present,
            res.kappa_present ? 4.0 / std::sqrt(res.kappa) * factor : 0.0,
            rec.distances.kolmogorov);

        double worst = 0.0;
        bool ok = true;
        for (auto& [psi, dpsi] : psis) {
            ApproxIppReport rep = verify_approx_ipp(nu, psi, dpsi, ExecMode::Serial);
            ok = ok && rep.ok;
            if (rep.rhs_assembled > 0.0)
                worst = std::max(worst, rep.lhs_assembled / rep.rhs_assembled);
        }
        rec.approx_ipp_worst = worst;
        rec.approx_ipp_ok = ok;

        if (res.gaussian_base) {
            rec.utev_applicable = rec.c_p_nu <= 2.0;
            if (rec.utev_applicable) {
                const double gain = sq(rec.distances.tv);
                rec.utev_holds = rec.c_p_nu >= 1.0 + gain / kUtevConstant - 1e-9;
                rec.utev_sharper_holds = rec.c_p_nu >= 1.0 + gain / 9.0 - 1e-9;
            }
        }
        records[j] = std::move(rec);
    }, cfg.mode);
    res.records = std::move(records);

    // dual-form W1 sanity on the widest perturbation of the first direction
    {
        const StabilityRecord& last = res.records[fracs.size() - 1];
        PerturbedMeasure nu = make_perturbed(m, dirs[0], last.eps, sopt);
        res.dual = w1_dual_check(mu_cdf, {m.grid.x, nu.cdf, nu.density}, cfg.seed);
    }

    res.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

UtevReport check_utev_gaussian(const SweepResult& result) {
    if (!result.gaussian_base)
        throw invalid_parameter("check_utev_gaussian: not a gaussian-base sweep");
    UtevReport rep;
    for (const StabilityRecord& r : result.records) {
        if (!r.utev_applicable) continue;
        ++rep.checked;
        const double margin = r.c_p_nu - 1.0 - sq(r.distances.tv) / kUtevConstant;
        rep.worst_margin = std::min(rep.worst_margin, margin);
        if (r.utev_sharper_holds) ++rep.sharper_held;
    }
    rep.ok = rep.worst_margin >= -1e-9;
    if (!rep.ok)
        throw invariant_violation("check_utev_gaussian: margin " +
                                  std::to_string(rep.worst_margin));
    return rep;
}

namespace {

nlohmann::json tolerances_json(const Tolerances& t) {
    return {{"quad_abs", t.quad_abs},
            {"quad_rel", t.quad_rel},
            {"quad_max_depth", t.quad_max_depth},
            {"phi_rel", t.phi_rel},
            {"truncation_v", t.truncation_v},
            {"moment", t.moment},
            {"cdf_limit", t.cdf_limit},
            {"invariant_slack", t.invariant_slack},
            {"stein_residual", t.stein_residual},
            {"representation_agree", t.representation_agree},
            {"spectral_residual", t.spectral_residual},
            {"ch_refine_rel", t.ch_refine_rel},
            {"ch_growth", t.ch_growth}};
}

} // namespace

std::string report_json(const SweepResult& result, const SweepConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["model"] = {{"label", result.model_label},
                  {"lambda_mu", result.lambda_mu},
                  {"c_p_mu_spectral", result.c_p_mu},
                  {"kappa_present", result.kappa_present},
                  {"kappa", result.kappa},
                  {"c_h", result.c_h},
                  {"c_h_finite", result.ch_finite},
                  {"c_h_extension_sups", result.ch_extension_sups},
                  {"density_sup_finite", bool(std::isfinite(result.density_sup))},
                  {"density_sup",
                   std::isfinite(result.density_sup) ? result.density_sup : -1.0}};
    j["provenance"] = {
        {"c_p_nu", "sharp quotient constant from the spectral module"},
        {"delta", "lambda_mu - lambda_1(nu*), same grid for base and perturbed"}};
    j["grid_size"] = result.grid_size;
    j["eps_steps"] = cfg.eps_steps;
    j["seed"] = result.seed;
    j["directions"] = cfg.directions;
    j["tolerances"] = tolerances_json(cfg.tol);
    j["assumptions"] = {{"positivity_ok", result.assumptions.positivity_ok},
                        {"growth_ok_at_a", result.assumptions.growth_ok_at_a},
                        {"growth_ok_at_b", result.assumptions.growth_ok_at_b},
                        {"ch_finite_expected", result.assumptions.ch_finite_expected}};
    j["dual_check"] = {{"primal", result.dual.primal},
                       {"worst_dual", result.dual.worst_dual},
                       {"seed", result.dual.seed},
                       {"functions", result.dual.functions},
                       {"ok", result.dual.ok}};
    nlohmann::json recs = nlohmann::json::array();
    for (const StabilityRecord& r : result.records) {
        nlohmann::json b = nlohmann::json::array();
        for (const TheoremCheck& tc : r.bounds)
            b.push_back({{"theorem", tc.id},
                         {"applicable", tc.applicable},
                         {"bound", tc.bound},
                         {"actual", tc.actual},
                         {"ratio", std::isfinite(tc.ratio) ? tc.ratio : -1.0},
                         {"holds", tc.holds}});
        recs.push_back({{"direction", r.direction},
                        {"eps", r.eps},
                        {"eps_max", r.eps_max},
                        {"delta", r.delta},
                        {"c_p_nu", r.c_p_nu},
                        {"w1", r.distances.w1},
                        {"tv", r.distances.tv},
                        {"kolmogorov", r.distances.kolmogorov},
                        {"bounds", b},
                        {"approx_ipp_worst", r.approx_ipp_worst},
                        {"approx_ipp_ok", r.approx_ipp_ok},
                        {"utev_applicable", r.utev_applicable},
                        {"utev_holds", r.utev_holds},
                        {"utev_sharper_holds", r.utev_sharper_holds}});
    }
    j["records"] = recs;
    return j.dump(2) + "\n";
}

void emit_outputs(const SweepResult& result, const SweepConfig& cfg) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (!fs::exists(cfg.out_dir))
        throw io_error("emit_outputs: cannot create " + cfg.out_dir);

    {
        std::ofstream out(fs::path(cfg.out_dir) / "report.json", std::ios::binary);
        if (!out) throw io_error("emit_outputs: cannot write report.json");
        out << report_json(result, cfg);
    }

    // bound-vs-actual curves per theorem
    std::vector<std::string> ids;
    if (!result.records.empty())
        for (const TheoremCheck& tc : result.records.front().bounds) ids.push_back(tc.id);
    for (const std::string& id : ids) {
        std::ofstream out(fs::path(cfg.out_dir) / ("bound_vs_actual_" + id + ".tsv"));
        out << "direction\teps\tactual\tbound\tratio\tapplicable\n";
        out.precision(17);
        for (const StabilityRecord& r : result.records)
            for (const TheoremCheck& tc : r.bounds)
                if (tc.id == id)
                    out << r.direction << '\t' << r.eps << '\t' << tc.actual << '\t'
                        << tc.bound << '\t' << (std::isfinite(tc.ratio) ? tc.ratio : -1.0)
                        << '\t' << (tc.applicable ? 1 : 0) << '\n';
    }

    for (auto& [name, payload] :
         {std::pair<const char*, const std::string*>{"measure.tsv", &result.measure_dump},
          {"ch_profile.tsv", &result.ch_profile_dump},
          {"eigenfunction.tsv", &result.eigenfunction_dump}}) {
        std::ofstream out(fs::path(cfg.out_dir) / name, std::ios::binary);
        out << *payload;
    }

    {
        std::ofstream out(fs::path(cfg.out_dir) / "summary.txt");
        out << "model " << result.model_label << "  lambda_mu " << result.lambda_mu
            << "  C_P(mu) " << result.c_p_mu << "\n";
        out << "kappa " << (result.kappa_present ? std::to_string(result.kappa) : "none")
            << "  C_h " << result.c_h << (result.ch_finite ? "" : " (not finite)")
            << "  density sup "
            << (std::isfinite(result.density_sup) ? std::to_string(result.density_sup)
                                                  : "unbounded")
            << "\n";
        out << "runtime " << result.runtime_seconds << " s\n\n";
        out << "direction        eps        delta      C_P(nu)    W1         TV         "
               "K          worst ratio\n";
        for (const StabilityRecord& r : result.records) {
            double worst = 0.0;
            for (const TheoremCheck& tc : r.bounds)
                if (tc.applicable && std::isfinite(tc.ratio)) worst = std::max(worst, tc.ratio);
            char line[256];
            std::snprintf(line, sizeof line,
                          "%-15s %-10.4g %-10.4g %-10.6g %-10.4g %-10.4g %-10.4g %-10.4g\n",
                          r.direction.c_str(), r.eps, r.delta, r.c_p_nu, r.distances.w1,
                          r.distances.tv, r.distances.kolmogorov, worst);
            out << line;
        }
    }
}

} // namespace qstab
