#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "wavesrc/errors.hpp"
#include "wavesrc/pipeline.hpp"

using nlohmann::json;
using namespace wavesrc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitNotConverged = 4;

json load_json_or_empty(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw config_error("config file " + path + " is not valid JSON: " + e.what());
    }
    return j;
}

struct Overrides {
    CLI::App* cmd = nullptr;
    std::string config_path;
    int test = 0;
    double delta = -1.0;
    std::uint64_t seed = 0;
    std::string output_dir;
    double eps1 = -1.0, eps2 = -1.0, diff_epsilon = -1.0;
    std::string mode, precond, diff_scaling;
    double tol_rel = -1.0;
    std::int64_t max_iters = -1;
    std::int64_t progress_every = -1;
    double ict_drop = -1.0;
    std::int64_t ict_max_fill = -1;
    bool images = false, no_images = false;
    bool quiet = false;

    void attach(CLI::App* app) {
        cmd = app;
        app->add_option("-c,--config", config_path, "JSON run config file");
        app->add_option("--test", test, "standard source 1..4")->check(CLI::Range(1, 4));
        app->add_option("--delta", delta, "relative noise level (e.g. 0.02)");
        app->add_option("--seed", seed, "noise seed");
        app->add_option("-o,--output-dir", output_dir, "artifact directory");
        app->add_option("--eps1", eps1, "field regularization weight");
        app->add_option("--eps2", eps2, "gradient regularization weight");
        app->add_option("--diff-epsilon", diff_epsilon,
                        "time differentiation regularization");
        app->add_option("--diff-scaling", diff_scaling,
                        "time differentiation scaling (trace|derivative)");
        app->add_option("--mode", mode, "operator mode (full|simplified)");
        app->add_option("--precond", precond,
                        "cg preconditioner (none|jacobi|ic0|ict)");
        app->add_option("--tol", tol_rel, "cg relative tolerance");
        app->add_option("--max-iters", max_iters, "cg iteration cap");
        app->add_option("--ict-drop", ict_drop, "ict drop threshold");
        app->add_option("--ict-max-fill", ict_max_fill, "ict fill cap per column");
        app->add_option("--progress-every", progress_every,
                        "print solver progress every k iterations");
        app->add_flag("--images", images, "write grayscale maps");
        app->add_flag("--no-images", no_images, "skip grayscale maps");
        app->add_flag("-q,--quiet", quiet, "suppress progress output");
    }

    json resolve() const {
        json j = load_json_or_empty(config_path);
        if (cmd->count("--test")) {
            j["test"] = test;
            j.erase("source");
        }
        if (cmd->count("--delta")) j["delta"] = delta;
        if (cmd->count("--seed")) j["seed"] = seed;
        if (cmd->count("--output-dir")) j["output_dir"] = output_dir;
        if (cmd->count("--eps1")) j["eps1"] = eps1;
        if (cmd->count("--eps2")) j["eps2"] = eps2;
        if (cmd->count("--diff-epsilon")) j["diff"]["epsilon"] = diff_epsilon;
        if (cmd->count("--diff-scaling")) j["diff"]["scaling"] = diff_scaling;
        if (cmd->count("--mode")) j["operator_mode"] = mode;
        if (cmd->count("--precond")) j["solver"]["precond"] = precond;
        if (cmd->count("--tol")) j["solver"]["tol_rel"] = tol_rel;
        if (cmd->count("--max-iters")) j["solver"]["max_iters"] = max_iters;
        if (cmd->count("--ict-drop")) j["solver"]["ict_drop"] = ict_drop;
        if (cmd->count("--ict-max-fill")) j["solver"]["ict_max_fill"] = ict_max_fill;
        if (cmd->count("--progress-every")) j["solver"]["progress_every"] = progress_every;
        if (images) j["images"] = true;
        if (no_images) j["images"] = false;
        if (quiet) j["quiet"] = true;
        return j;
    }
};

int cmd_synthesize(const Overrides& ov) {
    const RunConfig cfg = parse_run_config(ov.resolve());
    ForwardConfig fc;
    fc.stride = cfg.fine.stride;
    fc.start = cfg.time_start;
    fc.quiet = cfg.quiet;
    const DecayingExcitation h;
    const Field3D u = forward_solve(cfg.source, h, cfg.fine_grid(), fc);
    const CauchyRecord clean = extract_cauchy(u, cfg.fine_grid(), cfg.inverse_grid());
    const CauchyRecord noisy = add_noise(clean, cfg.delta, cfg.seed);
    std::filesystem::create_directories(cfg.output_dir);
    const std::string path = cfg.output_dir + "/cauchy.csv";
    write_cauchy_csv(noisy, path);
    if (!cfg.quiet) std::cout << "wrote " << path << "\n";
    return kExitOk;
}

int cmd_differentiate(const Overrides& ov, const std::string& input,
                      const std::string& output) {
    const RunConfig cfg = parse_run_config(ov.resolve());
    const CauchyRecord rec = read_cauchy_csv(input);
    const double dt = cfg.dt_convention == DtConvention::t_over_nt
                          ? rec.t_final / rec.n_t
                          : rec.t_final / (rec.n_t - 1);
    const TraceArray F_tt = differentiate_traces(rec.F, dt, cfg.diff);
    const TraceArray G_tt = differentiate_traces(rec.G, dt, cfg.diff);
    std::ofstream os(output);
    if (!os) throw config_error("cannot open " + output);
    os << "# wavesrc-derivatives v1\n# nodes=" << F_tt.n_nodes << " n_t=" << F_tt.n_t
       << " dt=" << dt << "\nnode,j,F_tt,G_tt\n";
    char buf[96];
    for (int k = 0; k < F_tt.n_nodes; ++k)
        for (int j = 0; j < F_tt.n_t; ++j) {
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", k, j + 1, F_tt.at(k, j),
                          G_tt.at(k, j));
            os << buf;
        }
    if (!cfg.quiet) std::cout << "wrote " << output << "\n";
    return kExitOk;
}

int cmd_reconstruct(const Overrides& ov) {
    const RunConfig cfg = parse_run_config(ov.resolve());
    const RunResult res = run_pipeline(cfg);
    if (!cfg.quiet) {
        std::cout << "status: " << res.status << "\n"
                  << "solver: " << res.stats.method << ", " << res.stats.iters
                  << " iterations, relative residual " << res.stats.rel_residual
                  << (res.stats.converged ? " (converged)" : " (NOT converged)") << "\n"
                  << "errors: min " << res.metrics.err_min * 100.0 << "%, max "
                  << res.metrics.err_max * 100.0 << "%, l2 " << res.metrics.l2 << "\n"
                  << "report: " << res.report_path << "\n";
    }
    return res.stats.converged ? kExitOk : kExitNotConverged;
}

int cmd_sweep(const std::string& config_path, int workers_override) {
    SweepSpec spec = load_sweep_spec(config_path);
    if (workers_override > 0) spec.workers = workers_override;
    const SweepResult res = run_sweep(spec);
    int failed = 0;
    for (const auto& r : res.rows)
        if (r.status != "ok") ++failed;
    std::cout << res.rows.size() << " runs (" << failed << " failed), table "
              << res.csv_path << ", summary " << res.summary_path << "\n";
    return kExitOk;
}

int cmd_inspect(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open report: " + path);
    json rep;
    try {
        is >> rep;
    } catch (const json::exception& e) {
        throw config_error("report is not valid JSON: " + std::string(e.what()));
    }
    std::cout << "status:   " << rep.value("status", std::string("?")) << "\n";
    std::cout << "test:     " << rep.value("test", 0) << "  delta: " << rep.value("delta", 0.0)
              << "  seed: " << rep.value("seed", std::uint64_t(0)) << "\n";
    if (rep.contains("metrics")) {
        const json& m = rep["metrics"];
        std::cout << "exact:    min " << m.value("true_min", 0.0) << ", max "
                  << m.value("true_max", 0.0) << "\n";
        std::cout << "computed: min " << m.value("rec_min", 0.0) << ", max "
                  << m.value("rec_max", 0.0) << "\n";
        std::cout << "errors:   min " << m.value("err_min", 0.0) * 100.0 << "%, max "
                  << m.value("err_max", 0.0) * 100.0 << "%, l2 " << m.value("l2", 0.0)
                  << (m.value("l2_absolute", false) ? " (absolute)" : "") << "\n";
    }
    if (rep.contains("solver")) {
        const json& s = rep["solver"];
        std::cout << "solver:   " << s.value("method", std::string("?")) << ", "
                  << s.value("iters", std::int64_t(0)) << " iterations, residual "
                  << s.value("rel_residual", 0.0)
                  << (s.value("converged", false) ? "" : " (NOT converged)") << "\n";
    }
    if (rep.contains("stage")) {
        std::cout << "failed stage: " << rep.value("stage", std::string("?")) << "\n"
                  << "error: " << rep.value("error", std::string("?")) << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"source reconstruction for the 2D wave equation from boundary data"};
    app.require_subcommand(1);

    Overrides ov_syn, ov_diff, ov_rec;

    CLI::App* syn = app.add_subcommand("synthesize",
                                       "forward-solve a test source and write noisy "
                                       "boundary data");
    ov_syn.attach(syn);

    CLI::App* dif = app.add_subcommand("differentiate",
                                       "second time derivatives of recorded boundary "
                                       "data");
    std::string diff_in, diff_out = "derivatives.csv";
    dif->add_option("-i,--input", diff_in, "cauchy.csv to differentiate")->required();
    dif->add_option("--output", diff_out, "output CSV path");
    ov_diff.attach(dif);

    CLI::App* rec = app.add_subcommand("reconstruct", "run the full pipeline");
    ov_rec.attach(rec);

    CLI::App* swp = app.add_subcommand("sweep", "run a batch of configurations");
    std::string sweep_cfg;
    int sweep_workers = 0;
    swp->add_option("-c,--config", sweep_cfg, "JSON sweep config")->required();
    swp->add_option("--workers", sweep_workers, "concurrent runs");

    CLI::App* ins = app.add_subcommand("inspect", "print a report summary");
    std::string report_path;
    ins->add_option("report", report_path, "report.json path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (syn->parsed()) return cmd_synthesize(ov_syn);
        if (dif->parsed()) return cmd_differentiate(ov_diff, diff_in, diff_out);
        if (rec->parsed()) return cmd_reconstruct(ov_rec);
        if (swp->parsed()) return cmd_sweep(sweep_cfg, sweep_workers);
        if (ins->parsed()) return cmd_inspect(report_path);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}
