#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "qstab/harness.hpp"
#include "qstab/measure.hpp"
#include "qstab/spectral.hpp"
#include "qstab/stein.hpp"

using namespace qstab;

namespace {

// Model key-values from --config plus inline flags; flags win.
KeyValues merge_model_kv(const std::string& config_path, const std::string& model,
                         const std::vector<std::string>& params) {
    KeyValues kv;
    if (!config_path.empty()) kv = KeyValues::parse_file(config_path);
    if (!model.empty()) kv.entries["family"] = model;
    for (const std::string& p : params) {
        auto eq = p.find('=');
        if (eq == std::string::npos) throw io_error("--param expects key=value, got: " + p);
        KeyValues one = KeyValues::parse(p.substr(0, eq) + " = " + p.substr(eq + 1));
        for (auto& [k, v] : one.entries) kv.entries[k] = v;
    }
    if (!kv.has("family")) throw io_error("no model family given (--model or --config)");
    return kv;
}

QuotientMeasure build_from(const KeyValues& kv, std::size_t grid_size, ExecMode mode) {
    DiffusionSpec spec = model_from_config(kv);
    MeasureBuildOptions mo;
    mo.n = grid_size;
    mo.mode = mode;
    return build_measure(spec, mo);
}

void print_assumptions(const QuotientMeasure& m) {
    AssumptionReport ar = check_assumptions(m.spec, m.grid);
    std::cout << "model " << m.spec.name << "\n"
              << "  interval (" << m.spec.a << ", " << m.spec.b << ")  lambda_mu "
              << m.spec.lambda_mu << "\n"
              << "  Z " << m.Z << "  m1 " << m.m1 << "  m2 " << m.m2 << "  mh " << m.mh
              << "\n"
              << "  positivity " << (ar.positivity_ok ? "ok" : "VIOLATED") << "\n"
              << "  ellipticity kappa "
              << (ar.ellipticity_kappa ? std::to_string(*ar.ellipticity_kappa) : "none")
              << "\n"
              << "  growth flags a/b " << ar.growth_ok_at_a << "/" << ar.growth_ok_at_b
              << "  C_h-finite conditions " << (ar.ch_finite_expected ? "met" : "not met")
              << "\n";
    for (const std::string& d : ar.details) std::cout << "  note: " << d << "\n";
}

std::ostream& open_or_stdout(std::ofstream& file, const std::string& path) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path, std::ios::binary);
    if (!file) throw io_error("cannot write " + path);
    return file;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quotient-diffusion stability laboratory"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    std::string config_path, model, out, out_dir = "out", target_name = "id";
    std::string density_path, direction = "cubic";
    std::vector<std::string> params;
    std::size_t grid_size = 4096, eps_steps = 8;
    double eps_frac = 0.5;
    bool serial = false;

    app.add_option("--config", config_path, "key=value config file");
    app.add_option("--model", model,
                   "model family (gaussian|gamma|sphere|quartic|log_concave)");
    app.add_option("--param", params, "model parameter, e.g. --param s=2 --param theta=0.5");
    app.add_option("--grid-size", grid_size, "grid nodes")->capture_default_str();
    app.add_option("--eps-steps", eps_steps, "eps ladder size")->capture_default_str();
    app.add_option("--out-dir", out_dir, "output directory")->capture_default_str();
    app.add_flag("--serial", serial, "run the serial reference kernels");

    auto* cmd_model = app.add_subcommand("model", "print spec and assumption report");
    auto* cmd_measure = app.add_subcommand("measure", "build and dump the quotient measure");
    cmd_measure->add_option("--out", out, "columnar output path (default stdout)");
    auto* cmd_stein = app.add_subcommand("stein", "solve one Stein target");
    cmd_stein->add_option("--target", target_name, "target name from the built-in family")
        ->capture_default_str();
    cmd_stein->add_option("--out", out, "dump psi columns to path");
    auto* cmd_ch = app.add_subcommand("ch", "compute C_h and its profile");
    cmd_ch->add_option("--out", out, "profile output path (default stdout)");
    auto* cmd_gap = app.add_subcommand("gap", "spectral gap of a dumped density");
    cmd_gap->add_option("--density", density_path, "columnar file with node and density")
        ->required();
    auto* cmd_verify = app.add_subcommand("verify", "single (direction, eps) stability check");
    cmd_verify->add_option("--direction", direction, "direction name")->capture_default_str();
    cmd_verify->add_option("--eps-frac", eps_frac, "fraction of eps_max")
        ->capture_default_str();
    auto* cmd_sweep = app.add_subcommand("sweep", "full (direction, eps) ladder");

    CLI11_PARSE(app, argc, argv);
    const ExecMode mode = serial ? ExecMode::Serial : ExecMode::OpenMP;
    set_default_exec_mode(mode);

    try {
        KeyValues kv = merge_model_kv(config_path, model, params);

        if (cmd_model->parsed()) {
            print_assumptions(build_from(kv, grid_size, mode));
            return 0;
        }
        if (cmd_measure->parsed()) {
            QuotientMeasure m = build_from(kv, grid_size, mode);
            std::ofstream file;
            dump_measure_columns(m, open_or_stdout(file, out));
            return 0;
        }
        if (cmd_stein->parsed()) {
            QuotientMeasure m = build_from(kv, grid_size, mode);
            auto targets = bounded_target_family();
            auto lt = lipschitz_target_family();
            targets.insert(targets.end(), lt.begin(), lt.end());
            const Target* found = nullptr;
            for (const Target& t : targets)
                if (t.name == target_name) found = &t;
            if (!found) throw invalid_parameter("unknown target: " + target_name);
            SteinSolution s = solve_stein(m, *found);
            std::cout << "target " << found->name << "  mu*(f) " << s.mu_f
                      << "\n  residual " << s.residual_max << "  representation gap "
                      << s.cross_agreement << "\n";
            if (!out.empty()) {
                std::ofstream file(out, std::ios::binary);
                if (!file) throw io_error("cannot write " + out);
                file << "node\tpsi\tpsi_prime\n";
                file.precision(17);
                for (std::size_t i = 0; i < m.grid.size(); ++i)
                    file << m.grid.x[i] << '\t' << s.psi[i] << '\t' << s.psi_prime[i] << '\n';
            }
            return 0;
        }
        if (cmd_ch->parsed()) {
            QuotientMeasure m = build_from(kv, grid_size, mode);
            ChBreakdown ch = compute_ch(m);
            std::cout << "C_h " << ch.c_h << (ch.finite ? "" : " (not finite)")
                      << "  extension sups:";
            for (double s : ch.extension_sups) std::cout << ' ' << s;
            std::cout << "\n";
            std::ofstream file;
            dump_ch_columns(m, ch, open_or_stdout(file, out));
            return 0;
        }
        if (cmd_gap->parsed()) {
            QuotientMeasure m = build_from(kv, grid_size, mode);
            std::ifstream in(density_path);
            if (!in) throw io_error("cannot read " + density_path);
            std::string header;
            std::getline(in, header);
            std::vector<double> nodes, dens;
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                std::istringstream ls(line);
                double node, value;
                if (ls >> node >> value) {
                    nodes.push_back(node);
                    dens.push_back(value);
                }
            }
            if (nodes.size() != m.grid.size())
                throw invalid_parameter("density file does not match the model grid");
            SpectralResult r = spectral_gap(dens, m);
            std::cout << "lambda1 " << r.lambda1 << "  C_P " << r.c_p_sharp
                      << "  precision " << r.reported_precision << "\n";
            return 0;
        }
        SweepConfig cfg = SweepConfig::from_config(kv);
        cfg.model_kv = kv;
        // explicit flags override the config file; otherwise the file wins
        if (app.count("--grid-size")) cfg.grid_size = grid_size;
        if (app.count("--eps-steps")) cfg.eps_steps = eps_steps;
        if (app.count("--out-dir") || cfg.out_dir.empty()) cfg.out_dir = out_dir;
        cfg.mode = mode;
        if (cmd_verify->parsed()) {
            cfg.directions = {direction};
            cfg.eps_fracs = {eps_frac};
            SweepResult r = run_sweep(cfg);
            std::cout << report_json(r, cfg);
            bool ok = true;
            for (const TheoremCheck& tc : r.records.front().bounds) ok = ok && tc.holds;
            return ok && r.records.front().approx_ipp_ok ? 0 : 2;
        }
        if (cmd_sweep->parsed()) {
            SweepResult r = run_sweep(cfg);
            emit_outputs(r, cfg);
            bool all_ok = true;
            for (const StabilityRecord& rec : r.records) {
                for (const TheoremCheck& tc : rec.bounds) all_ok = all_ok && tc.holds;
                all_ok = all_ok && rec.approx_ipp_ok && rec.utev_holds;
            }
            std::cout << "sweep " << r.model_label << ": " << r.records.size()
                      << " records, " << (all_ok ? "all bounds hold" : "VIOLATIONS")
                      << ", outputs in " << cfg.out_dir << "\n";
            return all_ok ? 0 : 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
