#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qstab/config.hpp"
#include "qstab/distances.hpp"
#include "qstab/model.hpp"
#include "qstab/perturb.hpp"
#include "qstab/stein.hpp"

namespace qstab {

struct SweepConfig {
    KeyValues model_kv;       // family + parameters
    std::string model_label;
    std::vector<std::string> directions = direction_library();
    std::size_t grid_size = 4096;
    std::size_t eps_steps = 8;
    std::vector<double> eps_fracs; // overrides the uniform ladder when nonempty
    std::uint64_t seed = 20240811; // dual-check seed, recorded in the report
    std::string out_dir = "out";
    Tolerances tol;
    ExecMode mode = ExecMode::OpenMP;

    static SweepConfig from_config(const KeyValues& kv);
};

struct TheoremCheck {
    std::string id; // w1_ch, tv_kappa, kolmogorov_ch, kolmogorov_kappa
    bool applicable = false;
    double bound = 0.0;
    double actual = 0.0;
    double ratio = 0.0;
    bool holds = true;
};

struct StabilityRecord {
    std::string direction;
    double eps = 0.0;
    double eps_max = 0.0;
    double delta = 0.0;
    double c_p_nu = 0.0;
    DistanceTriple distances;
    std::vector<TheoremCheck> bounds;
    double approx_ipp_worst = 0.0; // max lhs/rhs over the psi test family
    bool approx_ipp_ok = true;
    bool utev_applicable = false;  // gaussian base with C_P(nu) <= 2
    bool utev_holds = true;        // C_P(nu) >= 1 + tv^2 / (16(1+sqrt 2))
    bool utev_sharper_holds = true; // informational: the constant-9 form
};

struct SweepResult {
    std::string model_label;
    double lambda_mu = 0.0;
    double c_p_mu = 0.0;        // spectral, quotient-sharp
    bool kappa_present = false;
    double kappa = 0.0;
    bool ch_finite = false;
    double c_h = 0.0;
    std::vector<double> ch_extension_sups;
    double density_sup = 0.0;   // +inf when unbounded
    bool gaussian_base = false;
    std::uint64_t seed = 0;
    std::size_t grid_size = 0;
    DualCheckReport dual;
    AssumptionReport assumptions;
    std::vector<StabilityRecord> records; // sorted by (direction, eps)
    double runtime_seconds = 0.0;         // human summary only, never in JSON
    std::string measure_dump;             // columnar plot payloads
    std::string ch_profile_dump;
    std::string eigenfunction_dump;
};

SweepResult run_sweep(const SweepConfig& cfg);

struct UtevReport {
    bool ok = false;
    std::size_t checked = 0;
    std::size_t sharper_held = 0; // informational count for the constant-9 form
    double worst_margin = kInf;   // min of C_P(nu) - 1 - tv^2/const
};

// Gaussian-base refinement at the end of the TV-stability section:
// C_P(nu) >= 1 + d_TV^2 / (16 (1 + sqrt 2)) whenever C_P(nu) <= 2.
UtevReport check_utev_gaussian(const SweepResult& result);

// Writes report.json, summary.txt, and the plot TSVs under out_dir.
void emit_outputs(const SweepResult& result, const SweepConfig& cfg);

// The JSON document alone (byte-identical across reruns of the same config).
std::string report_json(const SweepResult& result, const SweepConfig& cfg);

// psi test family shared by the approximate-IPP suite.
std::vector<std::pair<std::function<double(double)>, std::function<double(double)>>>
ipp_test_family();

} // namespace qstab
