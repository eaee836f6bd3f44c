#include "wavesrc/assembly.hpp"

#include <cmath>
#include <sstream>

#include "wavesrc/errors.hpp"

namespace wavesrc {

double AuxiliaryHTilde::value(double x, double y, double t) const {
    return h_->h0(x, y) * std::exp(t * h_->q(x, y));
}

std::array<double, 2> AuxiliaryHTilde::g(double x, double y, double t) const {
    const double h0 = h_->h0(x, y);
    const auto gh = h_->grad_h0(x, y);
    const auto gq = h_->grad_q(x, y);
    return {gh[0] / h0 + t * gq[0], gh[1] / h0 + t * gq[1]};
}

double AuxiliaryHTilde::div_g(double x, double y, double t) const {
    const double h0 = h_->h0(x, y);
    const auto gh = h_->grad_h0(x, y);
    const double gx = gh[0] / h0, gy = gh[1] / h0;
    return h_->lap_h0(x, y) / h0 - (gx * gx + gy * gy) + t * h_->lap_q(x, y);
}

double AuxiliaryHTilde::htt_over(double x, double y) const {
    const double q = h_->q(x, y);
    return q * q;
}

double AuxiliaryHTilde::lap_over(double x, double y, double t) const {
    const auto gv = g(x, y, t);
    return gv[0] * gv[0] + gv[1] * gv[1] + div_g(x, y, t);
}

double AuxiliaryHTilde::inv_t(double x, double y, double t) const {
    return -h_->q(x, y) / value(x, y, t);
}

double AuxiliaryHTilde::inv_tt(double x, double y, double t) const {
    const double q = h_->q(x, y);
    return q * q / value(x, y, t);
}

std::array<double, 2> AuxiliaryHTilde::grad_inv(double x, double y, double t) const {
    const auto gv = g(x, y, t);
    const double inv = 1.0 / value(x, y, t);
    return {-gv[0] * inv, -gv[1] * inv};
}

double AuxiliaryHTilde::lap_inv(double x, double y, double t) const {
    const auto gv = g(x, y, t);
    const double g2 = gv[0] * gv[0] + gv[1] * gv[1];
    return (g2 - div_g(x, y, t)) / value(x, y, t);
}

double AuxiliaryHTilde::normal_deriv(double x, double y, double t, double nu_x,
                                     double nu_y) const {
    const auto gv = g(x, y, t);
    return (gv[0] * nu_x + gv[1] * nu_y) * value(x, y, t);
}

AuxiliaryHTilde build_h_tilde(const Excitation& h, const SpaceTimeGrid& grid) {
    AuxiliaryHTilde ht(h);
    const int N = grid.space.n;
    const double t_last = grid.time.t(grid.time.n_t);
    for (int m = 1; m <= N; ++m) {
        for (int n = 1; n <= N; ++n) {
            const double x = grid.space.x(m), y = grid.space.y(n);
            const double h0 = h.h0(x, y);
            if (!(std::abs(h0) > 1e-300)) {
                std::ostringstream os;
                os << "excitation vanishes at t=0 at node (m,n)=(" << m << "," << n
                   << "), x=" << x << ", y=" << y
                   << "; the auxiliary function is undefined there";
                throw numeric_error(os.str());
            }
            const double ht_t0 = h.q(x, y) * h0;
            const double want = h.h_t(x, y, 0.0);
            if (std::abs(ht_t0 - want) > 1e-9 * std::max(1.0, std::abs(want))) {
                std::ostringstream os;
                os << "excitation q() is inconsistent with h_t at node (m,n)=(" << m
                   << "," << n << "): q*h0=" << ht_t0 << " but h_t(x,0)=" << want;
                throw numeric_error(os.str());
            }
            const double v_last = ht.value(x, y, t_last);
            if (!std::isfinite(v_last) || !(std::abs(v_last) > 1e-300)) {
                std::ostringstream os;
                os << "auxiliary function degenerates over [0,T] at node (m,n)=(" << m
                   << "," << n << "): value(" << t_last << ")=" << v_last;
                throw numeric_error(os.str());
            }
        }
    }
    return ht;
}

BoundaryData compute_boundary_data(const TraceArray& F_tt, const TraceArray& G_tt,
                                   const AuxiliaryHTilde& ht, const SpaceTimeGrid& grid) {
    const auto nodes = boundary_nodes(grid.space);
    const int K = int(nodes.size());
    const int n_t = grid.time.n_t;
    if (F_tt.n_nodes != K || G_tt.n_nodes != K || F_tt.n_t != n_t || G_tt.n_t != n_t)
        throw config_error("boundary trace shape does not match the grid");

    BoundaryData out{TraceArray(K, n_t), TraceArray(K, n_t)};
    for (int k = 0; k < K; ++k) {
        const auto& nd = nodes[std::size_t(k)];
        const double x = grid.space.x(nd.m), y = grid.space.y(nd.n);
        for (int j0 = 0; j0 < n_t; ++j0) {
            const double t = grid.time.t(j0 + 1);
            const double hv = ht.value(x, y, t);
            const double dn = ht.normal_deriv(x, y, t, nd.nu_x, nd.nu_y);
            const double ftt = F_tt.at(k, j0), gtt = G_tt.at(k, j0);
            out.zeta.at(k, j0) = ftt / hv;
            out.xi.at(k, j0) = (gtt * hv - dn * ftt) / (hv * hv);
        }
    }
    return out;
}

OperatorBlock assemble_wave_operator(const SpaceTimeGrid& grid, const AuxiliaryHTilde& ht,
                                     OperatorMode mode, const Coefficients& coeffs,
                                     bool scale_pde_rows_dt2) {
    if (mode == OperatorMode::paper_simplified && !coeffs.is_default())
        throw config_error(
            "non-default coefficients require the full operator mode; the simplified "
            "stencil hardcodes c=1, a=0, B=0");
    if (coeffs.c <= 0.0)
        throw config_error("wave speed coefficient c must be positive");

    const int N = grid.space.n;
    const int n_t = grid.time.n_t;
    const double dx = grid.space.dx, dt = grid.time.dt;
    const double idt2 = 1.0 / (dt * dt), idx2 = 1.0 / (dx * dx);
    const double c = coeffs.c;
    const double row_scale = scale_pde_rows_dt2 ? dt * dt : 1.0;

    const std::int64_t n_rows =
        std::int64_t(std::max(N - 2, 0)) * std::max(N - 2, 0) * std::max(n_t - 2, 0);
    CooBuilder bld(int(n_rows), int(grid.unknowns()));
    const Excitation& h = ht.excitation();

    auto idx = [&](int m, int n, int j) { return flat_index(m - 1, n - 1, j - 1, N, n_t); };

    std::int64_t row = 0;
    for (int m = 2; m <= N - 1; ++m) {
        for (int n = 2; n <= N - 1; ++n) {
            const double x = grid.space.x(m), y = grid.space.y(n);
            const double q = ht.r(x, y);
            const double av = coeffs.a ? coeffs.a(x, y) : 0.0;
            const double bx = coeffs.b_x ? coeffs.b_x(x, y) : 0.0;
            const double by = coeffs.b_y ? coeffs.b_y(x, y) : 0.0;
            for (int j = 2; j <= n_t - 1; ++j) {
                const double t = grid.time.t(j);
                if (mode == OperatorMode::full) {
                    const auto gv = ht.g(x, y, t);
                    const double divg = ht.div_g(x, y, t);
                    const double g2 = gv[0] * gv[0] + gv[1] * gv[1];
                    const double zero_order =
                        c * q * q - (g2 + divg) - (bx * gv[0] + by * gv[1]) - av;
                    bld.add(row, idx(m, n, j),
                            row_scale * (-2.0 * c * idt2 + 4.0 * idx2 + zero_order));
                    bld.add(row, idx(m, n, j + 1), row_scale * (c * idt2 + c * q / dt));
                    bld.add(row, idx(m, n, j - 1), row_scale * (c * idt2 - c * q / dt));
                    bld.add(row, idx(m - 1, n, j),
                            row_scale * (-idx2 + (2.0 * gv[0] + bx) / (2.0 * dx)));
                    bld.add(row, idx(m + 1, n, j),
                            row_scale * (-idx2 - (2.0 * gv[0] + bx) / (2.0 * dx)));
                    bld.add(row, idx(m, n - 1, j),
                            row_scale * (-idx2 + (2.0 * gv[1] + by) / (2.0 * dx)));
                    bld.add(row, idx(m, n + 1, j),
                            row_scale * (-idx2 - (2.0 * gv[1] + by) / (2.0 * dx)));
                    bld.add(row, idx(m, n, 1),
                            row_scale * (-c * h.h_tt(x, y, t) / ht.value(x, y, t)));
                } else {
                    bld.add(row, idx(m, n, j), row_scale * (-2.0 * idt2 + 4.0 * idx2));
                    bld.add(row, idx(m, n, j + 1), row_scale * idt2);
                    bld.add(row, idx(m, n, j - 1), row_scale * idt2);
                    bld.add(row, idx(m - 1, n, j), row_scale * (-idx2));
                    bld.add(row, idx(m + 1, n, j), row_scale * (-idx2));
                    bld.add(row, idx(m, n - 1, j), row_scale * (-idx2));
                    bld.add(row, idx(m, n + 1, j), row_scale * (-idx2));
                    bld.add(row, idx(m, n, 1),
                            row_scale * (-h.h_tt(x, y, t) / ht.value(x, y, t)));
                }
                ++row;
            }
        }
    }

    OperatorBlock out;
    out.L = bld.build();
    out.rhs.assign(std::size_t(n_rows), 0.0);
    return out;
}

ConstraintBlocks assemble_constraints(const SpaceTimeGrid& grid, const BoundaryData& data,
                                      const Field2D& psi) {
    const int N = grid.space.n;
    const int n_t = grid.time.n_t;
    const double dt = grid.time.dt, dx = grid.space.dx;
    if (psi.nx != N || psi.ny != N)
        throw config_error("initial-rate field shape does not match the grid");
    const auto nodes = boundary_nodes(grid.space);
    const int K = int(nodes.size());
    if (data.zeta.n_nodes != K || data.zeta.n_t != n_t || data.xi.n_nodes != K ||
        data.xi.n_t != n_t)
        throw config_error("boundary data shape does not match the grid");

    const int cols = int(grid.unknowns());
    auto idx = [&](int m, int n, int j) { return flat_index(m - 1, n - 1, j - 1, N, n_t); };

    ConstraintBlocks out;

    CooBuilder bdt(N * N, cols);
    out.rhs_dt.reserve(std::size_t(N) * N);
    std::int64_t row = 0;
    for (int m = 1; m <= N; ++m) {
        for (int n = 1; n <= N; ++n) {
            bdt.add(row, idx(m, n, 1), -1.0 / dt);
            bdt.add(row, idx(m, n, 2), 1.0 / dt);
            out.rhs_dt.push_back(psi.at(m - 1, n - 1));
            ++row;
        }
    }
    out.Dt = bdt.build();

    CooBuilder bd(K * n_t, cols);
    CooBuilder bn(K * n_t, cols);
    out.rhs_d.reserve(std::size_t(K) * n_t);
    out.rhs_n.reserve(std::size_t(K) * n_t);
    row = 0;
    for (int k = 0; k < K; ++k) {
        const auto& nd = nodes[std::size_t(k)];
        const int mi = nd.m - int(nd.nu_x); // inward neighbor
        const int ni = nd.n - int(nd.nu_y);
        for (int j = 1; j <= n_t; ++j) {
            bd.add(row, idx(nd.m, nd.n, j), 1.0);
            bn.add(row, idx(nd.m, nd.n, j), 1.0 / dx);
            bn.add(row, idx(mi, ni, j), -1.0 / dx);
            out.rhs_d.push_back(data.zeta.at(k, j - 1));
            out.rhs_n.push_back(data.xi.at(k, j - 1));
            ++row;
        }
    }
    out.D = bd.build();
    out.N = bn.build();
    return out;
}

Penalties assemble_penalties(const SpaceTimeGrid& grid) {
    const int N = grid.space.n;
    const int n_t = grid.time.n_t;
    const double dx = grid.space.dx, dt = grid.time.dt;
    const int cols = int(grid.unknowns());
    auto idx = [&](int m, int n, int j) { return flat_index(m - 1, n - 1, j - 1, N, n_t); };

    Penalties out;

    CooBuilder bx(int(std::int64_t(N - 1) * N * n_t), cols);
    std::int64_t row = 0;
    for (int m = 1; m <= N - 1; ++m)
        for (int n = 1; n <= N; ++n)
            for (int j = 1; j <= n_t; ++j) {
                bx.add(row, idx(m, n, j), -1.0 / dx);
                bx.add(row, idx(m + 1, n, j), 1.0 / dx);
                ++row;
            }
    out.Dx = bx.build();

    CooBuilder by(int(std::int64_t(N) * (N - 1) * n_t), cols);
    row = 0;
    for (int m = 1; m <= N; ++m)
        for (int n = 1; n <= N - 1; ++n)
            for (int j = 1; j <= n_t; ++j) {
                by.add(row, idx(m, n, j), -1.0 / dx);
                by.add(row, idx(m, n + 1, j), 1.0 / dx);
                ++row;
            }
    out.Dy = by.build();

    CooBuilder bt(int(std::int64_t(N) * N * (n_t - 1)), cols);
    row = 0;
    for (int m = 1; m <= N; ++m)
        for (int n = 1; n <= N; ++n)
            for (int j = 1; j <= n_t - 1; ++j) {
                bt.add(row, idx(m, n, j), -1.0 / dt);
                bt.add(row, idx(m, n, j + 1), 1.0 / dt);
                ++row;
            }
    out.Dt = bt.build();
    return out;
}

StackedSystem stack_system(const ConstraintBlocks& cons, const OperatorBlock& op) {
    StackedSystem out;
    out.C = vstack({&cons.Dt, &cons.D, &cons.N, &op.L});
    out.rows_dt = cons.Dt.nrows;
    out.rows_d = cons.D.nrows;
    out.rows_n = cons.N.nrows;
    out.rows_l = op.L.nrows;
    out.b.reserve(std::size_t(out.C.nrows));
    out.b.insert(out.b.end(), cons.rhs_dt.begin(), cons.rhs_dt.end());
    out.b.insert(out.b.end(), cons.rhs_d.begin(), cons.rhs_d.end());
    out.b.insert(out.b.end(), cons.rhs_n.begin(), cons.rhs_n.end());
    out.b.insert(out.b.end(), op.rhs.begin(), op.rhs.end());
    return out;
}

NormalSystem assemble_normal_system(const StackedSystem& sys, const Penalties& pen,
                                    double eps1, double eps2, bool verbatim_rhs) {
    if (eps1 < 0.0 || eps2 < 0.0)
        throw config_error("regularization weights must be nonnegative");
    if (verbatim_rhs && sys.C.nrows != sys.C.ncols) {
        std::ostringstream os;
        os << "verbatim right-hand side requires a square stacked system, got "
           << sys.C.nrows << "x" << sys.C.ncols
           << "; drop the flag to use the least-squares right-hand side";
        throw config_error(os.str());
    }

    Csr E;
    if (eps2 > 0.0) {
        const double s = std::sqrt(eps2);
        Csr dx = pen.Dx, dy = pen.Dy, dtb = pen.Dt;
        for (auto& v : dx.val) v *= s;
        for (auto& v : dy.val) v *= s;
        for (auto& v : dtb.val) v *= s;
        E = vstack({&sys.C, &dx, &dy, &dtb});
    } else {
        E = sys.C;
    }

    NormalSystem out;
    out.eps1 = eps1;
    out.eps2 = eps2;
    const Csr Et = transpose(E);
    out.M = spgemm(Et, E);
    if (eps1 > 0.0) out.M = add_diagonal(out.M, eps1);

    if (verbatim_rhs) {
        out.rhs = sys.b;
    } else {
        out.rhs.assign(std::size_t(sys.C.ncols), 0.0);
        for (int i = 0; i < sys.C.nrows; ++i) {
            const double bi = sys.b[std::size_t(i)];
            if (bi == 0.0) continue;
            for (std::int64_t p = sys.C.ptr[i]; p < sys.C.ptr[i + 1]; ++p)
                out.rhs[std::size_t(sys.C.col[std::size_t(p)])] +=
                    sys.C.val[std::size_t(p)] * bi;
        }
    }
    return out;
}

} // namespace wavesrc
