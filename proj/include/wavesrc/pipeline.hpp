#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "wavesrc/assembly.hpp"
#include "wavesrc/forward.hpp"
#include "wavesrc/reconstruct.hpp"
#include "wavesrc/solver.hpp"
#include "wavesrc/time_derivative.hpp"

namespace wavesrc {

struct GridSpec {
    int n = 45;
    int n_t = 60;
    double half_width = 0.5;
};

struct FineGridSpec {
    int n = 250;
    double half_width = 3.0;
    int stride = 2;
};

// Fully resolved run description. The JSON schema mirrors the fields; unknown
// keys are rejected so misspelled parameters cannot silently fall back to
// defaults.
struct RunConfig {
    int test = 1; // 1..4 standard sources, 0 custom
    SourceSpec source = SourceSpec::for_test(1);
    double delta = 0.0;
    std::uint64_t seed = 1;
    GridSpec inverse;
    FineGridSpec fine;
    double t_final = 1.0;
    DtConvention dt_convention = DtConvention::t_over_nt;
    TimeStart time_start = TimeStart::taylor;
    DiffConfig diff{3e-8, EpsScaling::derivative, false};
    OperatorMode operator_mode = OperatorMode::full;
    double eps1 = 3e-3;
    double eps2 = 1.5e-4;
    bool verbatim_normal_rhs = false;
    bool scale_pde_rows_dt2 = false;
    CgConfig solver;
    std::string output_dir = "out";
    bool images = true;
    bool write_field = true;
    double profile_y = 0.0;
    bool quiet = false;

    RunConfig() {
        solver.tol_rel = 1e-3;
        solver.max_iters = 40000;
        solver.precond = Preconditioner::ic0;
    }

    SpaceTimeGrid inverse_grid() const;
    SpaceTimeGrid fine_grid() const;
    void validate() const;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
// Exact resolved configuration; parsing the echo reproduces the config.
nlohmann::json config_echo(const RunConfig& cfg);

struct RunResult {
    std::string status; // "ok" or "incomplete"
    std::string stage_error;
    SourceMetrics metrics;
    SolveStats stats;
    nlohmann::json report;
    std::string report_path;
};

// synthesize -> differentiate -> assemble -> solve -> reconstruct, writing
// cauchy.csv, w_field.csv, p_grid.csv, profiles.csv, report.json (and grayscale
// maps when enabled) under cfg.output_dir. Stage failures still write a report
// marked incomplete, then rethrow with the stage name.
RunResult run_pipeline(const RunConfig& cfg);

struct SweepSpec {
    RunConfig base;
    // Empty lists mean "keep the base value". Expansion order is delta, eps1,
    // eps2, diff_epsilon with seeds innermost, so seed groups are contiguous.
    std::vector<double> deltas;
    std::vector<double> eps1_values;
    std::vector<double> eps2_values;
    std::vector<double> diff_epsilons;
    std::vector<std::uint64_t> seeds;
    int workers = 1;
    std::string output_dir = "sweep";
};

SweepSpec parse_sweep_spec(const nlohmann::json& j);
SweepSpec load_sweep_spec(const std::string& path);

struct SweepRow {
    int index = 0;
    double delta = 0.0, eps1 = 0.0, eps2 = 0.0, diff_epsilon = 0.0;
    std::uint64_t seed = 0;
    int test = 0;
    std::string status; // "ok", "incomplete", or the error class
    std::string error;
    SourceMetrics metrics;
    SolveStats stats;
    std::string run_dir;
};

struct SweepGroup {
    double delta = 0.0, eps1 = 0.0, eps2 = 0.0, diff_epsilon = 0.0;
    int test = 0;
    int n_runs = 0, n_ok = 0;
    double l2_mean = 0.0, l2_std = 0.0;
    double err_min_mean = 0.0, err_min_std = 0.0;
    double err_max_mean = 0.0, err_max_std = 0.0;
    double iters_mean = 0.0, seconds_mean = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepGroup> groups; // seed-aggregated, same order as first occurrence
    std::string csv_path, summary_path;
};

// Runs the expanded config list (failed runs are recorded and the sweep
// continues), writes one CSV row per run plus a seed-aggregated summary with
// mean and sample standard deviation.
SweepResult run_sweep(const SweepSpec& spec);

} // namespace wavesrc
