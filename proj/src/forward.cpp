#include "wavesrc/forward.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "wavesrc/errors.hpp"
#include "wavesrc/rng.hpp"

namespace wavesrc {

void leapfrog_step(Field2D& next, const Field2D& cur, const Field2D& prev,
                   const Field2D& src, double dt, double dx) {
    const int nx = cur.nx, ny = cur.ny;
    const double idx2 = 1.0 / (dx * dx), dt2 = dt * dt;
    for (int i = 1; i < nx - 1; ++i) {
        for (int j = 1; j < ny - 1; ++j) {
            const double lap = (cur.at(i + 1, j) + cur.at(i - 1, j) + cur.at(i, j + 1) +
                                cur.at(i, j - 1) - 4.0 * cur.at(i, j)) * idx2;
            next.at(i, j) = 2.0 * cur.at(i, j) - prev.at(i, j) + dt2 * (lap + src.at(i, j));
        }
    }
    for (int i = 0; i < nx; ++i) { next.at(i, 0) = 0.0; next.at(i, ny - 1) = 0.0; }
    for (int j = 0; j < ny; ++j) { next.at(0, j) = 0.0; next.at(nx - 1, j) = 0.0; }
}

Field3D forward_solve(const SourceSpec& p, const Excitation& h, const SpaceTimeGrid& fine,
                      const ForwardConfig& cfg) {
    const int nf = fine.space.n, n_rec = fine.time.n_t;
    if (cfg.stride < 1) throw config_error("forward: stride must be >= 1");
    const double dx = fine.space.dx;
    const double dt = fine.time.dt / cfg.stride;
    const double cfl_limit = dx / std::sqrt(2.0);
    if (dt > cfl_limit * (1.0 + 1e-12)) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "forward: CFL violated, dt=%.6g exceeds dx/sqrt(2)=%.6g (dx=%.6g)", dt,
                      cfl_limit, dx);
        throw config_error(buf);
    }
    if (!cfg.quiet && dt > cfg.cfl_warn_ratio * cfl_limit)
        std::cerr << "forward: warning, CFL ratio " << dt / cfl_limit << " above "
                  << cfg.cfl_warn_ratio << "\n";

    Field2D P(nf, nf);
    for (int i = 0; i < nf; ++i)
        for (int j = 0; j < nf; ++j) P.at(i, j) = p.evaluate(fine.space.x(i + 1), fine.space.y(j + 1));

    Field3D rec(nf, nf, n_rec);
    Field2D prev(nf, nf), cur(nf, nf), next(nf, nf), src(nf, nf);

    if (cfg.start == TimeStart::taylor) {
        for (int i = 1; i < nf - 1; ++i)
            for (int j = 1; j < nf - 1; ++j)
                cur.at(i, j) = 0.5 * dt * dt * P.at(i, j) *
                               h.h(fine.space.x(i + 1), fine.space.y(j + 1), 0.0);
    }

    // levels: prev = u(0), cur = u(dt); record level L into slot L/stride.
    const std::int64_t n_int = std::int64_t(n_rec) * cfg.stride;
    if (cfg.stride == 1 && n_rec > 1)
        for (int i = 0; i < nf; ++i)
            for (int j = 0; j < nf; ++j) rec.at(i, j, 1) = cur.at(i, j);

    for (std::int64_t lev = 1; lev < n_int - 1; ++lev) {
        const double t = lev * dt;
        for (int i = 0; i < nf; ++i)
            for (int j = 0; j < nf; ++j)
                src.at(i, j) = P.at(i, j) * h.h(fine.space.x(i + 1), fine.space.y(j + 1), t);
        leapfrog_step(next, cur, prev, src, dt, dx);
        std::swap(prev, cur);
        std::swap(cur, next);
        const std::int64_t done = lev + 1;
        if (done % cfg.stride == 0 && done / cfg.stride < n_rec) {
            const int slot = int(done / cfg.stride);
            for (int i = 0; i < nf; ++i)
                for (int j = 0; j < nf; ++j) rec.at(i, j, slot) = cur.at(i, j);
        }
    }
    return rec;
}

namespace {

double bilinear(const Field2D& f, double lo, double dx, double x, double y) {
    const int n = f.nx;
    double si = (x - lo) / dx, sj = (y - lo) / dx;
    int i = std::min(n - 2, std::max(0, int(std::floor(si))));
    int j = std::min(n - 2, std::max(0, int(std::floor(sj))));
    const double fi = si - i, fj = sj - j;
    return (1 - fi) * (1 - fj) * f.at(i, j) + fi * (1 - fj) * f.at(i + 1, j) +
           (1 - fi) * fj * f.at(i, j + 1) + fi * fj * f.at(i + 1, j + 1);
}

} // namespace

CauchyRecord extract_cauchy(const Field3D& u, const SpaceTimeGrid& fine,
                            const SpaceTimeGrid& inverse) {
    const int N = inverse.space.n, n_t = inverse.time.n_t;
    if (fine.time.n_t != n_t)
        throw config_error("extract_cauchy: fine and inverse grids must share the time axis");
    const double hf = fine.space.dx, lo = fine.space.x_min;
    const double tol = 1e-12 * (fine.space.x_max - fine.space.x_min);
    if (inverse.space.x_min < fine.space.x_min - tol ||
        inverse.space.x_max > fine.space.x_max + tol)
        throw config_error("extract_cauchy: inverse grid not contained in fine grid");

    const auto nodes = boundary_nodes(inverse.space);
    CauchyRecord rec;
    rec.n = N;
    rec.n_t = n_t;
    rec.half_width = 0.5 * (inverse.space.x_max - inverse.space.x_min);
    rec.t_final = inverse.time.t_final;
    rec.F = TraceArray(int(nodes.size()), n_t);
    rec.G = TraceArray(int(nodes.size()), n_t);

    for (int j = 0; j < n_t; ++j) {
        const Field2D fld = u.slice(j);
        for (int k = 0; k < int(nodes.size()); ++k) {
            const auto& bn = nodes[k];
            const double x = inverse.space.x(bn.m), y = inverse.space.y(bn.n);
            const double u0 = bilinear(fld, lo, hf, x, y);
            const double u1 = bilinear(fld, lo, hf, x - hf * bn.nu_x, y - hf * bn.nu_y);
            const double u2 = bilinear(fld, lo, hf, x - 2 * hf * bn.nu_x, y - 2 * hf * bn.nu_y);
            rec.F.at(k, j) = u0;
            rec.G.at(k, j) = (3.0 * u0 - 4.0 * u1 + u2) / (2.0 * hf);
        }
    }
    return rec;
}

CauchyRecord add_noise(const CauchyRecord& rec, double delta, std::uint64_t seed) {
    if (delta < 0.0) throw config_error("add_noise: delta must be >= 0");
    CauchyRecord out = rec;
    out.delta = delta;
    out.seed = seed;
    if (delta == 0.0) return out;
    const CounterRng rf(seed, rng_stage::noise_f), rg(seed, rng_stage::noise_g);
    const int nb = rec.F.n_nodes, n_t = rec.F.n_t;
    for (int k = 0; k < nb; ++k)
        for (int j = 0; j < n_t; ++j) {
            const std::uint64_t idx = std::uint64_t(k) * n_t + j;
            out.F.at(k, j) = rec.F.at(k, j) * (1.0 + delta * rf.symmetric(idx));
            out.G.at(k, j) = rec.G.at(k, j) * (1.0 + delta * rg.symmetric(idx));
        }
    return out;
}

void write_cauchy_csv(const CauchyRecord& rec, std::ostream& os) {
    os.precision(17);
    os << "# wavesrc-cauchy v1\n";
    os << "# n=" << rec.n << " n_t=" << rec.n_t << " half_width=" << rec.half_width
       << " t_final=" << rec.t_final << " delta=" << rec.delta << " seed=" << rec.seed << "\n";
    os << "# columns: node,j,F,G (node = boundary enumeration index, j = 1-based time level)\n";
    for (int k = 0; k < rec.F.n_nodes; ++k)
        for (int j = 0; j < rec.n_t; ++j)
            os << k << ',' << (j + 1) << ',' << rec.F.at(k, j) << ',' << rec.G.at(k, j) << '\n';
}

CauchyRecord read_cauchy_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# wavesrc-cauchy v1", 0) != 0)
        throw config_error("cauchy file: missing 'wavesrc-cauchy v1' header");
    CauchyRecord rec;
    if (!std::getline(is, line)) throw config_error("cauchy file: truncated header");
    {
        std::istringstream hs(line);
        std::string tok;
        hs >> tok; // '#'
        while (hs >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
            if (key == "n") rec.n = std::stoi(val);
            else if (key == "n_t") rec.n_t = std::stoi(val);
            else if (key == "half_width") rec.half_width = std::stod(val);
            else if (key == "t_final") rec.t_final = std::stod(val);
            else if (key == "delta") rec.delta = std::stod(val);
            else if (key == "seed") rec.seed = std::stoull(val);
        }
    }
    if (rec.n < 2 || rec.n_t < 1) throw config_error("cauchy file: bad grid shape in header");
    const int nb = 4 * rec.n - 4;
    rec.F = TraceArray(nb, rec.n_t);
    rec.G = TraceArray(nb, rec.n_t);
    std::getline(is, line); // columns comment
    int rows = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        int k, j;
        double f, g;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &k, &j, &f, &g) != 4)
            throw config_error("cauchy file: bad row '" + line + "'");
        if (k < 0 || k >= nb || j < 1 || j > rec.n_t)
            throw config_error("cauchy file: row index out of range: '" + line + "'");
        rec.F.at(k, j - 1) = f;
        rec.G.at(k, j - 1) = g;
        ++rows;
    }
    if (rows != nb * rec.n_t) throw config_error("cauchy file: row count mismatch");
    return rec;
}

void write_cauchy_csv(const CauchyRecord& rec, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw config_error("cannot open for writing: " + path);
    write_cauchy_csv(rec, os);
}

CauchyRecord read_cauchy_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open: " + path);
    return read_cauchy_csv(is);
}

} // namespace wavesrc
