#include "wavesrc/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wavesrc/errors.hpp"

namespace wavesrc {

Field2D extract_source(const std::vector<double>& w, const SpaceTimeGrid& grid,
                       const Excitation& h, double c, const Field2D* lap_f) {
    const int N = grid.space.n;
    const int n_t = grid.time.n_t;
    if (std::int64_t(w.size()) != grid.unknowns())
        throw config_error("field vector length does not match the grid");
    if (lap_f && (lap_f->nx != N || lap_f->ny != N))
        throw config_error("initial-displacement Laplacian shape does not match the grid");

    Field2D p(N, N);
    for (int m0 = 0; m0 < N; ++m0) {
        for (int n0 = 0; n0 < N; ++n0) {
            double v = c * w[std::size_t(flat_index(m0, n0, 0, N, n_t))];
            if (lap_f) {
                const double h0 = h.h0(grid.space.x(m0 + 1), grid.space.y(n0 + 1));
                v -= lap_f->at(m0, n0) / h0;
            }
            p.at(m0, n0) = v;
        }
    }
    return p;
}

SourceMetrics compute_metrics(const Field2D& p_rec, const Field2D& p_exact) {
    if (p_rec.nx != p_exact.nx || p_rec.ny != p_exact.ny)
        throw config_error("metric fields must share a shape");

    SourceMetrics m;
    double diff2 = 0.0, exact2 = 0.0;
    m.rec_min = m.rec_max = p_rec.v.empty() ? 0.0 : p_rec.v[0];
    m.true_min = m.true_max = p_exact.v.empty() ? 0.0 : p_exact.v[0];
    for (std::size_t i = 0; i < p_rec.v.size(); ++i) {
        const double r = p_rec.v[i], e = p_exact.v[i];
        m.rec_min = std::min(m.rec_min, r);
        m.rec_max = std::max(m.rec_max, r);
        m.true_min = std::min(m.true_min, e);
        m.true_max = std::max(m.true_max, e);
        diff2 += (r - e) * (r - e);
        exact2 += e * e;
    }

    m.absolute = exact2 == 0.0;
    if (m.absolute) {
        m.l2 = p_rec.v.empty() ? 0.0 : std::sqrt(diff2 / double(p_rec.v.size()));
    } else {
        m.l2 = std::sqrt(diff2 / exact2);
    }
    const auto extreme_err = [](double rec, double exact) {
        const double d = std::abs(rec - exact);
        return std::abs(exact) > 1e-300 ? d / std::abs(exact) : d;
    };
    m.err_min = extreme_err(m.rec_min, m.true_min);
    m.err_max = extreme_err(m.rec_max, m.true_max);
    return m;
}

std::vector<ProfilePoint> line_profile(const Field2D& p, const SpatialGrid2D& grid,
                                       double y_line) {
    if (p.nx != grid.n || p.ny != grid.n)
        throw config_error("profile field shape does not match the grid");
    const double pad = 1e-12 * (grid.y_max - grid.y_min);
    if (y_line < grid.y_min - pad || y_line > grid.y_max + pad) {
        std::ostringstream os;
        os << "profile line y=" << y_line << " lies outside [" << grid.y_min << ","
           << grid.y_max << "]";
        throw config_error(os.str());
    }
    int best = 1;
    double best_d = std::abs(grid.y(1) - y_line);
    for (int n = 2; n <= grid.n; ++n) {
        const double d = std::abs(grid.y(n) - y_line);
        if (d < best_d) {
            best = n;
            best_d = d;
        }
    }
    std::vector<ProfilePoint> out;
    out.reserve(std::size_t(grid.n));
    for (int m = 1; m <= grid.n; ++m)
        out.push_back({grid.x(m), p.at(m - 1, best - 1)});
    return out;
}

void write_pgm(const Field2D& p, const std::string& path, double lo, double hi) {
    if (!(hi > lo)) throw config_error("image range must satisfy hi > lo");
    std::ofstream os(path);
    if (!os) throw config_error("cannot open image file for writing: " + path);
    os << "P2\n" << p.nx << " " << p.ny << "\n255\n";
    for (int n0 = p.ny - 1; n0 >= 0; --n0) {
        for (int m0 = 0; m0 < p.nx; ++m0) {
            const double t = (p.at(m0, n0) - lo) / (hi - lo);
            const int g = int(std::lround(255.0 * std::clamp(t, 0.0, 1.0)));
            os << g << (m0 + 1 == p.nx ? "" : " ");
        }
        os << "\n";
    }
    if (!os) throw config_error("failed writing image file: " + path);
}

} // namespace wavesrc
