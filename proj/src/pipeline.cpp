#include "wavesrc/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "wavesrc/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wavesrc {
namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string iso_utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
    if (!j.is_object()) throw config_error(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw config_error("unknown key \"" + it.key() + "\" in " + where +
                               "; remove or fix the spelling");
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw config_error(std::string("key \"") + key + "\" has the wrong type");
    }
}

SourceKind parse_kind(const std::string& s) {
    if (s == "two_inclusions") return SourceKind::two_inclusions;
    if (s == "three_inclusions") return SourceKind::three_inclusions;
    if (s == "peaks") return SourceKind::peaks;
    if (s == "letters") return SourceKind::letters_AL;
    if (s == "custom_grid") return SourceKind::custom_grid;
    throw config_error("unknown source kind \"" + s + "\"");
}

std::string kind_name(SourceKind k) {
    switch (k) {
        case SourceKind::two_inclusions: return "two_inclusions";
        case SourceKind::three_inclusions: return "three_inclusions";
        case SourceKind::peaks: return "peaks";
        case SourceKind::letters_AL: return "letters";
        case SourceKind::custom_grid: return "custom_grid";
    }
    return "?";
}

} // namespace

SpaceTimeGrid RunConfig::inverse_grid() const {
    SpaceTimeGrid g;
    g.space = SpatialGrid2D::square(-inverse.half_width, inverse.half_width, inverse.n);
    g.time = TimeGrid::make(t_final, inverse.n_t, dt_convention);
    return g;
}

SpaceTimeGrid RunConfig::fine_grid() const {
    SpaceTimeGrid g;
    g.space = SpatialGrid2D::square(-fine.half_width, fine.half_width, fine.n);
    g.time = TimeGrid::make(t_final, inverse.n_t, dt_convention);
    return g;
}

void RunConfig::validate() const {
    if (test < 0 || test > 4) throw config_error("test must be 0 (custom) or 1..4");
    if (source.kind == SourceKind::custom_grid &&
        (source.grid_n < 2 || std::int64_t(source.grid_values.size()) !=
                                  std::int64_t(source.grid_n) * source.grid_n))
        throw config_error("custom_grid source needs grid_n >= 2 and grid_n*grid_n values");
    if (delta < 0.0) throw config_error("noise level delta must be nonnegative");
    if (t_final <= 0.0) throw config_error("t_final must be positive");
    if (inverse.n < 3) throw config_error("inverse grid needs n >= 3");
    if (inverse.n_t < 3) throw config_error("inverse grid needs n_t >= 3");
    if (inverse.half_width <= 0.0 || fine.half_width <= 0.0)
        throw config_error("grid half widths must be positive");
    if (fine.half_width < inverse.half_width)
        throw config_error("fine grid must contain the inverse grid");
    if (fine.n < 2) throw config_error("fine grid needs n >= 2");
    if (fine.stride < 1) throw config_error("recording stride must be >= 1");
    if (diff.epsilon <= 0.0)
        throw config_error("differentiation regularization epsilon must be positive");
    if (eps1 <= 0.0) throw config_error("eps1 must be positive");
    if (eps2 < 0.0) throw config_error("eps2 must be nonnegative");
    if (solver.tol_rel <= 0.0) throw config_error("solver tolerance must be positive");
    if (solver.max_iters < 0) throw config_error("solver iteration cap must be >= 0");
}

RunConfig parse_run_config(const json& j) {
    check_keys(j, {"schema_version", "test", "source", "amplitude_scale",
                   "coordinate_scale", "delta", "seed", "inverse_grid", "fine_grid",
                   "t_final", "dt_convention", "time_start", "diff", "operator_mode",
                   "eps1", "eps2", "verbatim_normal_rhs", "scale_pde_rows_dt2",
                   "solver", "output_dir", "images", "write_field", "profile_y",
                   "quiet"},
               "run config");
    const int schema = get_or<int>(j, "schema_version", 1);
    if (schema != 1) throw config_error("unsupported schema_version (expected 1)");

    RunConfig cfg;
    if (j.contains("source")) {
        if (j.contains("test") || j.contains("amplitude_scale") ||
            j.contains("coordinate_scale"))
            throw config_error("give either \"test\" (with optional scales) or a full "
                               "\"source\" object, not both");
        const json& s = j.at("source");
        check_keys(s, {"kind", "amplitude_scale", "coordinate_scale", "grid_n", "values"},
                   "source");
        cfg.test = 0;
        cfg.source = SourceSpec{};
        cfg.source.kind = parse_kind(get_or<std::string>(s, "kind", "custom_grid"));
        cfg.source.amplitude_scale = get_or<double>(s, "amplitude_scale", 1.0);
        cfg.source.coordinate_scale = get_or<double>(s, "coordinate_scale", 6.0);
        cfg.source.grid_n = get_or<int>(s, "grid_n", 0);
        cfg.source.grid_values = get_or<std::vector<double>>(s, "values", {});
        if (cfg.source.kind == SourceKind::custom_grid) {
            if (cfg.source.grid_n < 2 ||
                std::int64_t(cfg.source.grid_values.size()) !=
                    std::int64_t(cfg.source.grid_n) * cfg.source.grid_n)
                throw config_error("custom_grid source needs grid_n >= 2 and "
                                   "grid_n*grid_n values");
        }
    } else {
        cfg.test = get_or<int>(j, "test", 1);
        if (cfg.test < 1 || cfg.test > 4)
            throw config_error("test must be 1..4 (or give a \"source\" object)");
        cfg.source = SourceSpec::for_test(cfg.test);
        cfg.source.amplitude_scale = get_or<double>(j, "amplitude_scale", 1.0);
        cfg.source.coordinate_scale =
            get_or<double>(j, "coordinate_scale", cfg.source.coordinate_scale);
    }

    cfg.delta = get_or<double>(j, "delta", 0.0);
    cfg.seed = get_or<std::uint64_t>(j, "seed", 1);
    if (j.contains("inverse_grid")) {
        const json& g = j.at("inverse_grid");
        check_keys(g, {"n", "n_t", "half_width"}, "inverse_grid");
        cfg.inverse.n = get_or<int>(g, "n", cfg.inverse.n);
        cfg.inverse.n_t = get_or<int>(g, "n_t", cfg.inverse.n_t);
        cfg.inverse.half_width = get_or<double>(g, "half_width", cfg.inverse.half_width);
    }
    if (j.contains("fine_grid")) {
        const json& g = j.at("fine_grid");
        check_keys(g, {"n", "half_width", "stride"}, "fine_grid");
        cfg.fine.n = get_or<int>(g, "n", cfg.fine.n);
        cfg.fine.half_width = get_or<double>(g, "half_width", cfg.fine.half_width);
        cfg.fine.stride = get_or<int>(g, "stride", cfg.fine.stride);
    }
    cfg.t_final = get_or<double>(j, "t_final", 1.0);

    const std::string conv = get_or<std::string>(j, "dt_convention", "t_over_nt");
    if (conv == "t_over_nt")
        cfg.dt_convention = DtConvention::t_over_nt;
    else if (conv == "t_over_nt_minus_1")
        cfg.dt_convention = DtConvention::t_over_nt_minus_1;
    else
        throw config_error("dt_convention must be t_over_nt or t_over_nt_minus_1");

    const std::string start = get_or<std::string>(j, "time_start", "taylor");
    if (start == "taylor")
        cfg.time_start = TimeStart::taylor;
    else if (start == "zero")
        cfg.time_start = TimeStart::paper_zero;
    else
        throw config_error("time_start must be taylor or zero");

    if (j.contains("diff")) {
        const json& d = j.at("diff");
        check_keys(d, {"epsilon", "scaling", "verbatim_rhs"}, "diff");
        cfg.diff.epsilon = get_or<double>(d, "epsilon", cfg.diff.epsilon);
        const std::string sc = get_or<std::string>(d, "scaling", "derivative");
        if (sc == "trace")
            cfg.diff.scaling = EpsScaling::trace;
        else if (sc == "derivative")
            cfg.diff.scaling = EpsScaling::derivative;
        else
            throw config_error("diff.scaling must be trace or derivative");
        cfg.diff.verbatim_rhs = get_or<bool>(d, "verbatim_rhs", false);
    }

    const std::string mode = get_or<std::string>(j, "operator_mode", "full");
    if (mode == "full")
        cfg.operator_mode = OperatorMode::full;
    else if (mode == "simplified")
        cfg.operator_mode = OperatorMode::paper_simplified;
    else
        throw config_error("operator_mode must be full or simplified");

    cfg.eps1 = get_or<double>(j, "eps1", cfg.eps1);
    cfg.eps2 = get_or<double>(j, "eps2", cfg.eps2);
    cfg.verbatim_normal_rhs = get_or<bool>(j, "verbatim_normal_rhs", false);
    cfg.scale_pde_rows_dt2 = get_or<bool>(j, "scale_pde_rows_dt2", false);

    if (j.contains("solver")) {
        const json& s = j.at("solver");
        check_keys(s,
                   {"tol_rel", "max_iters", "precond", "ict_drop", "ict_max_fill",
                    "progress_every"},
                   "solver");
        cfg.solver.tol_rel = get_or<double>(s, "tol_rel", cfg.solver.tol_rel);
        cfg.solver.max_iters = get_or<std::int64_t>(s, "max_iters", cfg.solver.max_iters);
        if (s.contains("precond")) {
            const std::string pc = s.at("precond").get<std::string>();
            if (pc == "none")
                cfg.solver.precond = Preconditioner::none;
            else if (pc == "jacobi")
                cfg.solver.precond = Preconditioner::jacobi;
            else if (pc == "ic0")
                cfg.solver.precond = Preconditioner::ic0;
            else if (pc == "ict")
                cfg.solver.precond = Preconditioner::ict;
            else
                throw config_error("solver.precond must be none, jacobi, ic0, or ict");
        }
        cfg.solver.ict_drop = get_or<double>(s, "ict_drop", cfg.solver.ict_drop);
        cfg.solver.ict_max_fill = get_or<int>(s, "ict_max_fill", cfg.solver.ict_max_fill);
        cfg.solver.progress_every = get_or<std::int64_t>(s, "progress_every", 0);
    }

    cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
    cfg.images = get_or<bool>(j, "images", cfg.images);
    cfg.write_field = get_or<bool>(j, "write_field", cfg.write_field);
    cfg.profile_y = get_or<double>(j, "profile_y", 0.0);
    cfg.quiet = get_or<bool>(j, "quiet", false);

    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw config_error("config file " + path + " is not valid JSON: " + e.what());
    }
    return parse_run_config(j);
}

json config_echo(const RunConfig& cfg) {
    json j;
    j["schema_version"] = 1;
    if (cfg.test != 0) {
        j["test"] = cfg.test;
        j["amplitude_scale"] = cfg.source.amplitude_scale;
        j["coordinate_scale"] = cfg.source.coordinate_scale;
    } else {
        json s;
        s["kind"] = kind_name(cfg.source.kind);
        s["amplitude_scale"] = cfg.source.amplitude_scale;
        s["coordinate_scale"] = cfg.source.coordinate_scale;
        s["grid_n"] = cfg.source.grid_n;
        s["values"] = cfg.source.grid_values;
        j["source"] = s;
    }
    j["delta"] = cfg.delta;
    j["seed"] = cfg.seed;
    j["inverse_grid"] = {{"n", cfg.inverse.n},
                         {"n_t", cfg.inverse.n_t},
                         {"half_width", cfg.inverse.half_width}};
    j["fine_grid"] = {{"n", cfg.fine.n},
                      {"half_width", cfg.fine.half_width},
                      {"stride", cfg.fine.stride}};
    j["t_final"] = cfg.t_final;
    j["dt_convention"] = cfg.dt_convention == DtConvention::t_over_nt
                             ? "t_over_nt"
                             : "t_over_nt_minus_1";
    j["time_start"] = cfg.time_start == TimeStart::taylor ? "taylor" : "zero";
    j["diff"] = {{"epsilon", cfg.diff.epsilon},
                 {"scaling", cfg.diff.scaling == EpsScaling::trace ? "trace" : "derivative"},
                 {"verbatim_rhs", cfg.diff.verbatim_rhs}};
    j["operator_mode"] =
        cfg.operator_mode == OperatorMode::full ? "full" : "simplified";
    j["eps1"] = cfg.eps1;
    j["eps2"] = cfg.eps2;
    j["verbatim_normal_rhs"] = cfg.verbatim_normal_rhs;
    j["scale_pde_rows_dt2"] = cfg.scale_pde_rows_dt2;
    const char* pc = "none";
    if (cfg.solver.precond == Preconditioner::jacobi) pc = "jacobi";
    if (cfg.solver.precond == Preconditioner::ic0) pc = "ic0";
    if (cfg.solver.precond == Preconditioner::ict) pc = "ict";
    j["solver"] = {{"tol_rel", cfg.solver.tol_rel},
                   {"max_iters", cfg.solver.max_iters},
                   {"precond", pc},
                   {"ict_drop", cfg.solver.ict_drop},
                   {"ict_max_fill", cfg.solver.ict_max_fill},
                   {"progress_every", cfg.solver.progress_every}};
    j["output_dir"] = cfg.output_dir;
    j["images"] = cfg.images;
    j["write_field"] = cfg.write_field;
    j["profile_y"] = cfg.profile_y;
    j["quiet"] = cfg.quiet;
    return j;
}

namespace {

void write_field_csv(const std::vector<double>& w, const SpaceTimeGrid& grid,
                     const std::string& path) {
    std::ofstream os(path);
    if (!os) throw config_error("cannot open " + path);
    const int N = grid.space.n, n_t = grid.time.n_t;
    os << "# wavesrc-field v1\n# n=" << N << " n_t=" << n_t << "\nm,n,j,w\n";
    for (int m = 1; m <= N; ++m)
        for (int n = 1; n <= N; ++n)
            for (int j = 1; j <= n_t; ++j)
                os << m << ',' << n << ',' << j << ','
                   << fmt17(w[std::size_t(flat_index(m - 1, n - 1, j - 1, N, n_t))])
                   << '\n';
    if (!os) throw config_error("failed writing " + path);
}

void write_grid_csv(const Field2D& p_true, const Field2D& p_comp,
                    const SpatialGrid2D& grid, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw config_error("cannot open " + path);
    os << "x,y,p_true,p_comp\n";
    for (int m = 1; m <= grid.n; ++m)
        for (int n = 1; n <= grid.n; ++n)
            os << fmt17(grid.x(m)) << ',' << fmt17(grid.y(n)) << ','
               << fmt17(p_true.at(m - 1, n - 1)) << ',' << fmt17(p_comp.at(m - 1, n - 1))
               << '\n';
    if (!os) throw config_error("failed writing " + path);
}

void write_profiles_csv(const std::vector<ProfilePoint>& tru,
                        const std::vector<ProfilePoint>& comp, double y_line,
                        const std::string& path) {
    std::ofstream os(path);
    if (!os) throw config_error("cannot open " + path);
    os << "# profile along the grid row nearest y=" << fmt17(y_line) << "\n";
    os << "x,p_true,p_comp\n";
    for (std::size_t i = 0; i < tru.size(); ++i)
        os << fmt17(tru[i].x) << ',' << fmt17(tru[i].value) << ','
           << fmt17(comp[i].value) << '\n';
    if (!os) throw config_error("failed writing " + path);
}

} // namespace

RunResult run_pipeline(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    const std::string dir = cfg.output_dir;
    const SpaceTimeGrid inv = cfg.inverse_grid();
    const SpaceTimeGrid fine = cfg.fine_grid();
    const DecayingExcitation h;

    RunResult result;
    result.status = "ok";
    json timings;
    std::vector<std::string> artifacts;
    const auto t_begin = std::chrono::steady_clock::now();
    auto elapsed = [](auto since) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
            .count();
    };

    std::string current_stage = "setup";
    auto write_report = [&](const json& extra) {
        json rep;
        rep["schema_version"] = 1;
        rep["status"] = result.status;
        rep["test"] = cfg.test;
        rep["delta"] = cfg.delta;
        rep["seed"] = cfg.seed;
        rep["config"] = config_echo(cfg);
        for (auto it = extra.begin(); it != extra.end(); ++it) rep[it.key()] = it.value();
        json vol;
        vol["created_at"] = iso_utc_now();
        timings["total"] = elapsed(t_begin);
        vol["timings"] = timings;
        rep["volatile"] = vol;
        result.report = rep;
        result.report_path = dir + "/report.json";
        std::ofstream os(result.report_path);
        os << rep.dump(2) << '\n';
    };

    try {
        // synthesize
        current_stage = "synthesize";
        auto t0 = std::chrono::steady_clock::now();
        CauchyRecord noisy;
        {
            ForwardConfig fc;
            fc.stride = cfg.fine.stride;
            fc.start = cfg.time_start;
            fc.quiet = cfg.quiet;
            const Field3D u = forward_solve(cfg.source, h, fine, fc);
            const CauchyRecord clean = extract_cauchy(u, fine, inv);
            noisy = add_noise(clean, cfg.delta, cfg.seed);
            write_cauchy_csv(noisy, dir + "/cauchy.csv");
            artifacts.push_back("cauchy.csv");
        }
        timings["synthesize"] = elapsed(t0);

        // differentiate
        current_stage = "differentiate";
        t0 = std::chrono::steady_clock::now();
        const TraceArray F_tt = differentiate_traces(noisy.F, inv.time.dt, cfg.diff);
        const TraceArray G_tt = differentiate_traces(noisy.G, inv.time.dt, cfg.diff);
        timings["differentiate"] = elapsed(t0);

        // assemble
        current_stage = "assemble";
        t0 = std::chrono::steady_clock::now();
        const AuxiliaryHTilde ht = build_h_tilde(h, inv);
        const BoundaryData bd = compute_boundary_data(F_tt, G_tt, ht, inv);
        const OperatorBlock op = assemble_wave_operator(inv, ht, cfg.operator_mode, {},
                                                        cfg.scale_pde_rows_dt2);
        const Field2D psi(inv.space.n, inv.space.n); // zero initial rate
        const ConstraintBlocks cons = assemble_constraints(inv, bd, psi);
        const Penalties pen = assemble_penalties(inv);
        const StackedSystem sys = stack_system(cons, op);
        const NormalSystem ns =
            assemble_normal_system(sys, pen, cfg.eps1, cfg.eps2, cfg.verbatim_normal_rhs);
        timings["assemble"] = elapsed(t0);

        // solve
        current_stage = "solve";
        t0 = std::chrono::steady_clock::now();
        CgConfig scfg = cfg.solver;
        if (scfg.progress_every > 0 && !scfg.progress && !cfg.quiet)
            scfg.progress = [](std::int64_t it, double res) {
                std::fprintf(stderr, "  cg iteration %lld, relative residual %.3e\n",
                             (long long)it, res);
            };
        const std::vector<double> w = cg_solve(ns.M, ns.rhs, scfg, &result.stats);
        timings["solve"] = elapsed(t0);

        // reconstruct
        current_stage = "reconstruct";
        t0 = std::chrono::steady_clock::now();
        const Field2D p_comp = extract_source(w, inv, h);
        Field2D p_true(inv.space.n, inv.space.n);
        for (int m = 1; m <= inv.space.n; ++m)
            for (int n = 1; n <= inv.space.n; ++n)
                p_true.at(m - 1, n - 1) = cfg.source.evaluate(inv.space.x(m), inv.space.y(n));
        result.metrics = compute_metrics(p_comp, p_true);

        if (cfg.write_field) {
            write_field_csv(w, inv, dir + "/w_field.csv");
            artifacts.push_back("w_field.csv");
        }
        write_grid_csv(p_true, p_comp, inv.space, dir + "/p_grid.csv");
        artifacts.push_back("p_grid.csv");
        const auto prof_true = line_profile(p_true, inv.space, cfg.profile_y);
        const auto prof_comp = line_profile(p_comp, inv.space, cfg.profile_y);
        write_profiles_csv(prof_true, prof_comp, cfg.profile_y, dir + "/profiles.csv");
        artifacts.push_back("profiles.csv");

        json extra;
        if (cfg.images) {
            double lo = std::min(result.metrics.true_min, result.metrics.rec_min);
            double hi = std::max(result.metrics.true_max, result.metrics.rec_max);
            if (!(hi > lo)) hi = lo + 1.0;
            write_pgm(p_comp, dir + "/p_comp.pgm", lo, hi);
            write_pgm(p_true, dir + "/p_true.pgm", lo, hi);
            artifacts.push_back("p_comp.pgm");
            artifacts.push_back("p_true.pgm");
            extra["image_mapping"] = {{"lo", lo}, {"hi", hi}};
        }
        timings["reconstruct"] = elapsed(t0);

        extra["metrics"] = {{"true_min", result.metrics.true_min},
                            {"true_max", result.metrics.true_max},
                            {"rec_min", result.metrics.rec_min},
                            {"rec_max", result.metrics.rec_max},
                            {"err_min", result.metrics.err_min},
                            {"err_max", result.metrics.err_max},
                            {"l2", result.metrics.l2},
                            {"l2_absolute", result.metrics.absolute}};
        extra["solver"] = {{"iters", result.stats.iters},
                           {"converged", result.stats.converged},
                           {"rel_residual", result.stats.rel_residual},
                           {"matrix_nnz", result.stats.nnz},
                           {"method", result.stats.method}};
        artifacts.push_back("report.json");
        extra["artifacts"] = artifacts;
        write_report(extra);
        return result;
    } catch (const config_error& e) {
        result.status = "incomplete";
        result.stage_error = current_stage + std::string(": ") + e.what();
        json extra;
        extra["stage"] = current_stage;
        extra["error"] = e.what();
        artifacts.push_back("report.json");
        extra["artifacts"] = artifacts;
        write_report(extra);
        throw config_error(result.stage_error);
    } catch (const std::exception& e) {
        result.status = "incomplete";
        result.stage_error = current_stage + std::string(": ") + e.what();
        json extra;
        extra["stage"] = current_stage;
        extra["error"] = e.what();
        artifacts.push_back("report.json");
        extra["artifacts"] = artifacts;
        write_report(extra);
        throw numeric_error(result.stage_error);
    }
}

SweepSpec parse_sweep_spec(const json& j) {
    check_keys(j,
               {"schema_version", "base", "deltas", "eps1_values", "eps2_values",
                "diff_epsilons", "seeds", "workers", "output_dir"},
               "sweep config");
    const int schema = get_or<int>(j, "schema_version", 1);
    if (schema != 1) throw config_error("unsupported schema_version (expected 1)");
    if (!j.contains("base")) throw config_error("sweep config needs a \"base\" run config");
    SweepSpec spec;
    spec.base = parse_run_config(j.at("base"));
    spec.deltas = get_or<std::vector<double>>(j, "deltas", {});
    spec.eps1_values = get_or<std::vector<double>>(j, "eps1_values", {});
    spec.eps2_values = get_or<std::vector<double>>(j, "eps2_values", {});
    spec.diff_epsilons = get_or<std::vector<double>>(j, "diff_epsilons", {});
    spec.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {});
    spec.workers = get_or<int>(j, "workers", 1);
    spec.output_dir = get_or<std::string>(j, "output_dir", "sweep");
    if (spec.workers < 1) throw config_error("workers must be >= 1");
    return spec;
}

SweepSpec load_sweep_spec(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open sweep config file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw config_error("sweep config " + path + " is not valid JSON: " + e.what());
    }
    return parse_sweep_spec(j);
}

SweepResult run_sweep(const SweepSpec& spec) {
    const std::vector<double> deltas =
        spec.deltas.empty() ? std::vector<double>{spec.base.delta} : spec.deltas;
    const std::vector<double> eps1s =
        spec.eps1_values.empty() ? std::vector<double>{spec.base.eps1} : spec.eps1_values;
    const std::vector<double> eps2s =
        spec.eps2_values.empty() ? std::vector<double>{spec.base.eps2} : spec.eps2_values;
    const std::vector<double> deps =
        spec.diff_epsilons.empty() ? std::vector<double>{spec.base.diff.epsilon}
                                   : spec.diff_epsilons;
    const std::vector<std::uint64_t> seeds =
        spec.seeds.empty() ? std::vector<std::uint64_t>{spec.base.seed} : spec.seeds;

    std::vector<RunConfig> cfgs;
    for (double d : deltas)
        for (double e1 : eps1s)
            for (double e2 : eps2s)
                for (double de : deps)
                    for (std::uint64_t s : seeds) {
                        RunConfig c = spec.base;
                        c.delta = d;
                        c.eps1 = e1;
                        c.eps2 = e2;
                        c.diff.epsilon = de;
                        c.seed = s;
                        c.quiet = true;
                        char sub[32];
                        std::snprintf(sub, sizeof sub, "run_%04d", int(cfgs.size()));
                        c.output_dir = spec.output_dir + "/" + sub;
                        cfgs.push_back(std::move(c));
                    }

    fs::create_directories(spec.output_dir);
    SweepResult out;
    out.rows.resize(cfgs.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cfgs.size()) return;
            SweepRow& row = out.rows[i];
            row.index = int(i);
            row.test = cfgs[i].test;
            row.delta = cfgs[i].delta;
            row.eps1 = cfgs[i].eps1;
            row.eps2 = cfgs[i].eps2;
            row.diff_epsilon = cfgs[i].diff.epsilon;
            row.seed = cfgs[i].seed;
            row.run_dir = cfgs[i].output_dir;
            try {
                const RunResult r = run_pipeline(cfgs[i]);
                row.status = r.status;
                row.metrics = r.metrics;
                row.stats = r.stats;
            } catch (const config_error& e) {
                row.status = "config_error";
                row.error = e.what();
            } catch (const std::exception& e) {
                row.status = "numeric_error";
                row.error = e.what();
            }
        }
    };
    if (spec.workers == 1 || cfgs.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const int nw = std::min<std::size_t>(spec.workers, cfgs.size());
        pool.reserve(std::size_t(nw));
        for (int t = 0; t < nw; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    out.csv_path = spec.output_dir + "/sweep.csv";
    {
        std::ofstream os(out.csv_path);
        if (!os) throw config_error("cannot open " + out.csv_path);
        os << "index,test,delta,seed,eps1,eps2,diff_epsilon,status,err_min,err_max,l2,"
              "l2_absolute,iters,converged,rel_residual,seconds,run_dir\n";
        for (const auto& r : out.rows) {
            os << r.index << ',' << r.test << ',' << fmt17(r.delta) << ',' << r.seed << ','
               << fmt17(r.eps1) << ',' << fmt17(r.eps2) << ',' << fmt17(r.diff_epsilon)
               << ',' << r.status << ',';
            if (r.status == "ok")
                os << fmt17(r.metrics.err_min) << ',' << fmt17(r.metrics.err_max) << ','
                   << fmt17(r.metrics.l2) << ',' << (r.metrics.absolute ? 1 : 0) << ','
                   << r.stats.iters << ',' << (r.stats.converged ? 1 : 0) << ','
                   << fmt17(r.stats.rel_residual) << ',' << fmt17(r.stats.seconds);
            else
                os << ",,,,,,,";
            os << ',' << r.run_dir << '\n';
        }
    }

    // seed-aggregated groups in first-occurrence order
    for (const auto& r : out.rows) {
        SweepGroup* grp = nullptr;
        for (auto& g : out.groups)
            if (g.test == r.test && g.delta == r.delta && g.eps1 == r.eps1 &&
                g.eps2 == r.eps2 && g.diff_epsilon == r.diff_epsilon) {
                grp = &g;
                break;
            }
        if (!grp) {
            out.groups.push_back({});
            grp = &out.groups.back();
            grp->test = r.test;
            grp->delta = r.delta;
            grp->eps1 = r.eps1;
            grp->eps2 = r.eps2;
            grp->diff_epsilon = r.diff_epsilon;
        }
        grp->n_runs += 1;
    }
    for (auto& g : out.groups) {
        std::vector<double> l2s, emins, emaxs, iters, secs;
        for (const auto& r : out.rows) {
            if (r.status != "ok" || g.test != r.test || g.delta != r.delta ||
                g.eps1 != r.eps1 || g.eps2 != r.eps2 || g.diff_epsilon != r.diff_epsilon)
                continue;
            l2s.push_back(r.metrics.l2);
            emins.push_back(r.metrics.err_min);
            emaxs.push_back(r.metrics.err_max);
            iters.push_back(double(r.stats.iters));
            secs.push_back(r.stats.seconds);
        }
        g.n_ok = int(l2s.size());
        auto mean = [](const std::vector<double>& v) {
            if (v.empty()) return 0.0;
            double s = 0.0;
            for (double x : v) s += x;
            return s / double(v.size());
        };
        auto sstd = [&](const std::vector<double>& v, double mu) {
            if (v.size() < 2) return 0.0;
            double s = 0.0;
            for (double x : v) s += (x - mu) * (x - mu);
            return std::sqrt(s / double(v.size() - 1));
        };
        g.l2_mean = mean(l2s);
        g.l2_std = sstd(l2s, g.l2_mean);
        g.err_min_mean = mean(emins);
        g.err_min_std = sstd(emins, g.err_min_mean);
        g.err_max_mean = mean(emaxs);
        g.err_max_std = sstd(emaxs, g.err_max_mean);
        g.iters_mean = mean(iters);
        g.seconds_mean = mean(secs);
    }

    out.summary_path = spec.output_dir + "/sweep_summary.csv";
    {
        std::ofstream os(out.summary_path);
        if (!os) throw config_error("cannot open " + out.summary_path);
        os << "test,delta,eps1,eps2,diff_epsilon,n_runs,n_ok,l2_mean,l2_std,"
              "err_min_mean,err_min_std,err_max_mean,err_max_std,iters_mean,"
              "seconds_mean\n";
        for (const auto& g : out.groups)
            os << g.test << ',' << fmt17(g.delta) << ',' << fmt17(g.eps1) << ','
               << fmt17(g.eps2) << ',' << fmt17(g.diff_epsilon) << ',' << g.n_runs << ','
               << g.n_ok << ',' << fmt17(g.l2_mean) << ',' << fmt17(g.l2_std) << ','
               << fmt17(g.err_min_mean) << ',' << fmt17(g.err_min_std) << ','
               << fmt17(g.err_max_mean) << ',' << fmt17(g.err_max_std) << ','
               << fmt17(g.iters_mean) << ',' << fmt17(g.seconds_mean) << '\n';
    }
    return out;
}

} // namespace wavesrc
