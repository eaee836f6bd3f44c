#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "wavesrc/assembly.hpp"
#include "wavesrc/errors.hpp"
#include "wavesrc/excitation.hpp"
#include "wavesrc/grid.hpp"
#include "wavesrc/rng.hpp"
#include "wavesrc/sparse.hpp"

using namespace wavesrc;

namespace {

SpaceTimeGrid make_grid(int n, int n_t) {
    SpaceTimeGrid g;
    g.space = SpatialGrid2D::square(-0.5, 0.5, n);
    g.time = TimeGrid::make(1.0, n_t);
    return g;
}

// Reference forms for the decaying excitation, written out independently.
double ref_htilde(double x, double y, double t) {
    return 2.0 * std::exp(-t * (4.0 + x * x + y * y) / 2.0);
}
double ref_h(double x, double y, double t) {
    return 1.0 + std::exp(-(4.0 + x * x + y * y) * t);
}
double ref_htt(double x, double y, double t) {
    const double s = 4.0 + x * x + y * y;
    return s * s * std::exp(-s * t);
}

std::vector<std::vector<double>> to_dense(const Csr& a) {
    std::vector<std::vector<double>> d(std::size_t(a.nrows),
                                       std::vector<double>(std::size_t(a.ncols), 0.0));
    for (int i = 0; i < a.nrows; ++i)
        for (std::int64_t p = a.ptr[std::size_t(i)]; p < a.ptr[std::size_t(i) + 1]; ++p)
            d[std::size_t(i)][std::size_t(a.col[std::size_t(p)])] = a.val[std::size_t(p)];
    return d;
}

// Space-time field sampled on grid nodes, time-fastest like the unknown vector.
template <typename F>
std::vector<double> sample_field(const SpaceTimeGrid& g, F f) {
    const int N = g.space.n, n_t = g.time.n_t;
    std::vector<double> w(std::size_t(g.unknowns()));
    for (int m = 1; m <= N; ++m)
        for (int n = 1; n <= N; ++n)
            for (int j = 1; j <= n_t; ++j)
                w[std::size_t(flat_index(m - 1, n - 1, j - 1, N, n_t))] =
                    f(g.space.x(m), g.space.y(n), g.time.t(j));
    return w;
}

struct VanishingExcitation final : Excitation {
    double h(double x, double, double t) const override { return x * std::exp(t); }
    double h_t(double x, double, double t) const override { return x * std::exp(t); }
    double h_tt(double x, double, double t) const override { return x * std::exp(t); }
    double q(double, double) const override { return 1.0; }
    std::array<double, 2> grad_h0(double, double) const override { return {1.0, 0.0}; }
    double lap_h0(double, double) const override { return 0.0; }
    std::array<double, 2> grad_q(double, double) const override { return {0.0, 0.0}; }
    double lap_q(double, double) const override { return 0.0; }
};

struct InconsistentExcitation final : Excitation {
    double h(double, double, double t) const override { return 2.0 + t; }
    double h_t(double, double, double) const override { return 1.0; }
    double h_tt(double, double, double) const override { return 0.0; }
    double q(double, double) const override { return 0.0; } // contradicts h_t
    std::array<double, 2> grad_h0(double, double) const override { return {0.0, 0.0}; }
    double lap_h0(double, double) const override { return 0.0; }
    std::array<double, 2> grad_q(double, double) const override { return {0.0, 0.0}; }
    double lap_q(double, double) const override { return 0.0; }
};

struct CollapsingExcitation final : Excitation {
    double h(double, double, double t) const override { return std::exp(-2000.0 * t); }
    double h_t(double, double, double t) const override {
        return -2000.0 * std::exp(-2000.0 * t);
    }
    double h_tt(double, double, double t) const override {
        return 4e6 * std::exp(-2000.0 * t);
    }
    double q(double, double) const override { return -2000.0; }
    std::array<double, 2> grad_h0(double, double) const override { return {0.0, 0.0}; }
    double lap_h0(double, double) const override { return 0.0; }
    std::array<double, 2> grad_q(double, double) const override { return {0.0, 0.0}; }
    double lap_q(double, double) const override { return 0.0; }
};

} // namespace

TEST_CASE("auxiliary function evaluators match finite differences") {
    const DecayingExcitation h;
    const AuxiliaryHTilde ht(h);
    const double d = 1e-5;
    const std::array<std::array<double, 3>, 3> pts = {
        {{0.3, -0.2, 0.7}, {-0.45, 0.45, 0.25}, {0.0, 0.0, 1.0}}};

    for (const auto& pt : pts) {
        const double x = pt[0], y = pt[1], t = pt[2];
        CAPTURE(x);
        CAPTURE(y);
        CAPTURE(t);
        const double r2 = x * x + y * y;

        CHECK(ht.value(x, y, t) == doctest::Approx(ref_htilde(x, y, t)).epsilon(1e-14));
        CHECK(ht.r(x, y) == doctest::Approx(-(4.0 + r2) / 2.0).epsilon(1e-14));
        CHECK(ht.htt_over(x, y) ==
              doctest::Approx(std::pow((4.0 + r2) / 2.0, 2)).epsilon(1e-14));

        auto inv = [&](double xx, double yy, double tt) {
            return 1.0 / ref_htilde(xx, yy, tt);
        };
        CHECK(ht.inv_t(x, y, t) ==
              doctest::Approx((inv(x, y, t + d) - inv(x, y, t - d)) / (2 * d)).epsilon(1e-8));
        CHECK(ht.inv_tt(x, y, t) ==
              doctest::Approx((inv(x, y, t + d) - 2 * inv(x, y, t) + inv(x, y, t - d)) /
                              (d * d))
                  .epsilon(1e-5));
        const auto gi = ht.grad_inv(x, y, t);
        CHECK(gi[0] ==
              doctest::Approx((inv(x + d, y, t) - inv(x - d, y, t)) / (2 * d)).epsilon(1e-8));
        CHECK(gi[1] ==
              doctest::Approx((inv(x, y + d, t) - inv(x, y - d, t)) / (2 * d)).epsilon(1e-8));
        CHECK(ht.lap_inv(x, y, t) ==
              doctest::Approx((inv(x + d, y, t) + inv(x - d, y, t) + inv(x, y + d, t) +
                               inv(x, y - d, t) - 4 * inv(x, y, t)) /
                              (d * d))
                  .epsilon(1e-4));

        const auto g = ht.g(x, y, t);
        CHECK(g[0] == doctest::Approx(-t * x).epsilon(1e-13));
        CHECK(g[1] == doctest::Approx(-t * y).epsilon(1e-13));
        CHECK(ht.div_g(x, y, t) == doctest::Approx(-2.0 * t).epsilon(1e-13));
        CHECK(ht.lap_over(x, y, t) == doctest::Approx(t * t * r2 - 2.0 * t).epsilon(1e-12));
        CHECK(ht.lap_over(x, y, t) ==
              doctest::Approx((ref_htilde(x + d, y, t) + ref_htilde(x - d, y, t) +
                               ref_htilde(x, y + d, t) + ref_htilde(x, y - d, t) -
                               4 * ref_htilde(x, y, t)) /
                              (d * d) / ref_htilde(x, y, t))
                  .epsilon(1e-4));

        const double nx = 1.0 / std::sqrt(2.0), ny = -1.0 / std::sqrt(2.0);
        const double dir = (ref_htilde(x + d * nx, y + d * ny, t) -
                            ref_htilde(x - d * nx, y - d * ny, t)) /
                           (2 * d);
        CHECK(ht.normal_deriv(x, y, t, nx, ny) == doctest::Approx(dir).epsilon(1e-8));
    }
}

TEST_CASE("decaying excitation derivatives are internally consistent") {
    const DecayingExcitation h;
    const double d = 1e-6;
    const double x = 0.35, y = -0.15, t = 0.6;
    CHECK(h.h(x, y, t) == doctest::Approx(ref_h(x, y, t)).epsilon(1e-14));
    CHECK(h.h_t(x, y, t) ==
          doctest::Approx((ref_h(x, y, t + d) - ref_h(x, y, t - d)) / (2 * d)).epsilon(1e-8));
    CHECK(h.h_tt(x, y, t) == doctest::Approx(ref_htt(x, y, t)).epsilon(1e-13));
    CHECK(h.q(x, y) == doctest::Approx(h.h_t(x, y, 0.0) / h.h0(x, y)).epsilon(1e-14));

    auto q = [&](double xx, double yy) { return h.q(xx, yy); };
    const auto gq = h.grad_q(x, y);
    CHECK(gq[0] == doctest::Approx((q(x + d, y) - q(x - d, y)) / (2 * d)).epsilon(1e-8));
    CHECK(gq[1] == doctest::Approx((q(x, y + d) - q(x, y - d)) / (2 * d)).epsilon(1e-8));
    CHECK(h.lap_q(x, y) == -2.0);
    CHECK(h.grad_h0(x, y)[0] == 0.0);
    CHECK(h.lap_h0(x, y) == 0.0);
}

TEST_CASE("auxiliary construction validates the excitation on the grid") {
    const SpaceTimeGrid g = make_grid(7, 5);

    CHECK_NOTHROW(build_h_tilde(DecayingExcitation{}, g));
    CHECK_NOTHROW(build_h_tilde(ConstantExcitation{3.0}, g));

    try {
        build_h_tilde(VanishingExcitation{}, g);
        FAIL("expected numeric_error");
    } catch (const numeric_error& e) {
        CHECK(std::string(e.what()).find("vanishes") != std::string::npos);
        CHECK(std::string(e.what()).find("(m,n)=") != std::string::npos);
    }

    try {
        build_h_tilde(InconsistentExcitation{}, g);
        FAIL("expected numeric_error");
    } catch (const numeric_error& e) {
        CHECK(std::string(e.what()).find("inconsistent") != std::string::npos);
    }

    CHECK_THROWS_AS(build_h_tilde(CollapsingExcitation{}, g), numeric_error);
}

TEST_CASE("boundary data combines traces with the auxiliary function") {
    const SpaceTimeGrid g = make_grid(7, 5);
    const DecayingExcitation h;
    const AuxiliaryHTilde ht = build_h_tilde(h, g);
    const auto nodes = boundary_nodes(g.space);
    const int K = int(nodes.size());
    REQUIRE(K == 24);

    CounterRng rng(7, 0x626f756eu);
    TraceArray F(K, g.time.n_t), G(K, g.time.n_t);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < g.time.n_t; ++j) {
            F.at(k, j) = rng.symmetric(2 * (k * 100 + j));
            G.at(k, j) = rng.symmetric(2 * (k * 100 + j) + 1);
        }

    const BoundaryData bd = compute_boundary_data(F, G, ht, g);
    REQUIRE(bd.zeta.n_nodes == K);
    REQUIRE(bd.xi.n_t == g.time.n_t);
    for (int k = 0; k < K; ++k) {
        const auto& nd = nodes[std::size_t(k)];
        const double x = g.space.x(nd.m), y = g.space.y(nd.n);
        for (int j = 0; j < g.time.n_t; ++j) {
            const double t = g.time.t(j + 1);
            const double hv = ref_htilde(x, y, t);
            const double dn = t * (-x * nd.nu_x - y * nd.nu_y) * hv;
            CHECK(bd.zeta.at(k, j) == doctest::Approx(F.at(k, j) / hv).epsilon(1e-13));
            CHECK(bd.xi.at(k, j) ==
                  doctest::Approx((G.at(k, j) * hv - dn * F.at(k, j)) / (hv * hv))
                      .epsilon(1e-13));
        }
    }

    TraceArray bad(K, g.time.n_t + 1);
    CHECK_THROWS_AS(compute_boundary_data(bad, G, ht, g), config_error);
    CHECK_THROWS_AS(compute_boundary_data(F, TraceArray(K - 1, g.time.n_t), ht, g),
                    config_error);
}

TEST_CASE("wave operator applied to the constant field leaves the zero-order terms") {
    const SpaceTimeGrid g = make_grid(9, 7);
    const DecayingExcitation h;
    const AuxiliaryHTilde ht = build_h_tilde(h, g);
    const int N = g.space.n, n_t = g.time.n_t;

    const std::vector<double> ones(std::size_t(g.unknowns()), 1.0);

    for (OperatorMode mode : {OperatorMode::paper_simplified, OperatorMode::full}) {
        const OperatorBlock op = assemble_wave_operator(g, ht, mode);
        REQUIRE(op.L.nrows == (N - 2) * (N - 2) * (n_t - 2));
        REQUIRE(int(op.rhs.size()) == op.L.nrows);
        for (double b : op.rhs) CHECK(b == 0.0);

        const std::vector<double> y = op.L.matvec(ones);
        std::int64_t row = 0;
        for (int m = 2; m <= N - 1; ++m)
            for (int n = 2; n <= N - 1; ++n)
                for (int j = 2; j <= n_t - 1; ++j, ++row) {
                    const double x = g.space.x(m), yy = g.space.y(n), t = g.time.t(j);
                    const double r2 = x * x + yy * yy;
                    const double q = -(4.0 + r2) / 2.0;
                    const double mem = ref_htt(x, yy, t) / ref_htilde(x, yy, t);
                    double expect = -mem;
                    if (mode == OperatorMode::full)
                        expect += q * q - (t * t * r2 - 2.0 * t);
                    CAPTURE(row);
                    CHECK(y[std::size_t(row)] == doctest::Approx(expect).epsilon(1e-11));
                }
    }
}

TEST_CASE("wave operator reproduces its closed form on low-order fields") {
    const SpaceTimeGrid g = make_grid(9, 8);
    const DecayingExcitation h;
    const AuxiliaryHTilde ht = build_h_tilde(h, g);
    const int N = g.space.n, n_t = g.time.n_t;

    // Affine space and time dependence is differentiated exactly by the
    // centered stencil, so the discrete action must equal the continuous one.
    const double al = 0.7, be = -1.3, ga = 0.8, de = 0.45;
    auto wf = [&](double x, double y, double t) { return al + be * x + ga * y + de * t; };
    const std::vector<double> w = sample_field(g, wf);

    Coefficients co;
    co.c = 1.7;
    co.a = [](double x, double y) { return 0.3 + x - 0.5 * y; };
    co.b_x = [](double x, double) { return 0.2 - x; };
    co.b_y = [](double, double y) { return 0.1 * y; };

    const OperatorBlock op = assemble_wave_operator(g, ht, OperatorMode::full, co);
    const std::vector<double> yv = op.L.matvec(w);
    std::int64_t row = 0;
    for (int m = 2; m <= N - 1; ++m)
        for (int n = 2; n <= N - 1; ++n)
            for (int j = 2; j <= n_t - 1; ++j, ++row) {
                const double x = g.space.x(m), y = g.space.y(n), t = g.time.t(j);
                const double r2 = x * x + y * y;
                const double q = -(4.0 + r2) / 2.0;
                const double gx = -t * x, gy = -t * y;
                const double divg = -2.0 * t;
                const double av = co.a(x, y), bx = co.b_x(x, y), by = co.b_y(x, y);
                const double zero = co.c * q * q - (gx * gx + gy * gy + divg) -
                                    (bx * gx + by * gy) - av;
                const double mem = co.c * ref_htt(x, y, t) / ref_htilde(x, y, t);
                const double expect = 2.0 * co.c * q * de - (2.0 * gx + bx) * be -
                                      (2.0 * gy + by) * ga + zero * wf(x, y, t) -
                                      mem * wf(x, y, 0.0);
                CAPTURE(row);
                CHECK(yv[std::size_t(row)] == doctest::Approx(expect).epsilon(1e-11));
            }

    // The simplified stencil annihilates everything but the memory term.
    const OperatorBlock ops = assemble_wave_operator(g, ht, OperatorMode::paper_simplified);
    const std::vector<double> ys = ops.L.matvec(w);
    row = 0;
    for (int m = 2; m <= N - 1; ++m)
        for (int n = 2; n <= N - 1; ++n)
            for (int j = 2; j <= n_t - 1; ++j, ++row) {
                const double x = g.space.x(m), y = g.space.y(n), t = g.time.t(j);
                const double expect =
                    -ref_htt(x, y, t) / ref_htilde(x, y, t) * wf(x, y, 0.0);
                CHECK(ys[std::size_t(row)] == doctest::Approx(expect).epsilon(1e-11));
            }
}

TEST_CASE("constant excitation collapses the full operator onto the plain stencil") {
    const SpaceTimeGrid g = make_grid(8, 6);
    const ConstantExcitation h(3.0);
    const AuxiliaryHTilde ht = build_h_tilde(h, g);

    const OperatorBlock full = assemble_wave_operator(g, ht, OperatorMode::full);
    const OperatorBlock simp = assemble_wave_operator(g, ht, OperatorMode::paper_simplified);

    const auto df = to_dense(full.L), ds = to_dense(simp.L);
    REQUIRE(df.size() == ds.size());
    for (std::size_t i = 0; i < df.size(); ++i)
        for (std::size_t jj = 0; jj < df[i].size(); ++jj)
            CHECK(df[i][jj] == doctest::Approx(ds[i][jj]).epsilon(1e-15));
}

TEST_CASE("operator rejects unsupported mode and coefficient combinations") {
    const SpaceTimeGrid g = make_grid(7, 5);
    const DecayingExcitation h;
    const AuxiliaryHTilde ht = build_h_tilde(h, g);

    Coefficients scaled;
    scaled.c = 2.0;
    CHECK_THROWS_AS(assemble_wave_operator(g, ht, OperatorMode::paper_simplified, scaled),
                    config_error);
    Coefficients witha;
    witha.a = [](double, double) { return 1.0; };
    CHECK_THROWS_AS(assemble_wave_operator(g, ht, OperatorMode::paper_simplified, witha),
                    config_error);
    Coefficients bad;
    bad.c = 0.0;
    CHECK_THROWS_AS(assemble_wave_operator(g, ht, OperatorMode::full, bad), config_error);
    bad.c = -1.0;
    CHECK_THROWS_AS(assemble_wave_operator(g, ht, OperatorMode::full, bad), config_error);
}

TEST_CASE("optional row scaling multiplies every operator entry by dt^2") {
    const SpaceTimeGrid g = make_grid(7, 6);
    const DecayingExcitation h;
    const AuxiliaryHTilde ht = build_h_tilde(h, g);
    const double dt2 = g.time.dt * g.time.dt;

    const OperatorBlock plain = assemble_wave_operator(g, ht, OperatorMode::full, {}, false);
    const OperatorBlock scaled = assemble_wave_operator(g, ht, OperatorMode::full, {}, true);
    REQUIRE(plain.L.val.size() == scaled.L.val.size());
    CHECK(plain.L.ptr == scaled.L.ptr);
    CHECK(plain.L.col == scaled.L.col);
    for (std::size_t i = 0; i < plain.L.val.size(); ++i)
        CHECK(scaled.L.val[i] == doctest::Approx(dt2 * plain.L.val[i]).epsilon(1e-15));
}

TEST_CASE("constraint blocks encode the data equations") {
    const SpaceTimeGrid g = make_grid(7, 5);
    const int N = g.space.n, n_t = g.time.n_t;
    const DecayingExcitation h;
    const AuxiliaryHTilde ht = build_h_tilde(h, g);
    const auto nodes = boundary_nodes(g.space);
    const int K = int(nodes.size());

    CounterRng rng(3, 0x636f6e73u);
    TraceArray F(K, n_t), G(K, n_t);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < n_t; ++j) {
            F.at(k, j) = rng.symmetric(2 * (k * 50 + j));
            G.at(k, j) = rng.symmetric(2 * (k * 50 + j) + 1);
        }
    const BoundaryData bd = compute_boundary_data(F, G, ht, g);

    Field2D psi(N, N);
    for (int m = 0; m < N; ++m)
        for (int n = 0; n < N; ++n) psi.at(m, n) = rng.symmetric(10000 + m * N + n);

    const ConstraintBlocks cons = assemble_constraints(g, bd, psi);
    REQUIRE(cons.Dt.nrows == N * N);
    REQUIRE(cons.D.nrows == K * n_t);
    REQUIRE(cons.N.nrows == K * n_t);

    const std::vector<double> w =
        sample_field(g, [](double x, double y, double t) {
            return std::sin(3 * x) + 0.5 * y * y + std::cos(2 * t + x * y);
        });

    const std::vector<double> ydt = cons.Dt.matvec(w);
    std::int64_t row = 0;
    for (int m = 1; m <= N; ++m)
        for (int n = 1; n <= N; ++n, ++row) {
            const auto at = [&](int j) {
                return w[std::size_t(flat_index(m - 1, n - 1, j - 1, N, n_t))];
            };
            CHECK(ydt[std::size_t(row)] ==
                  doctest::Approx((at(2) - at(1)) / g.time.dt).epsilon(1e-13));
            CHECK(cons.rhs_dt[std::size_t(row)] == psi.at(m - 1, n - 1));
        }

    const std::vector<double> yd = cons.D.matvec(w);
    const std::vector<double> yn = cons.N.matvec(w);
    row = 0;
    for (int k = 0; k < K; ++k) {
        const auto& nd = nodes[std::size_t(k)];
        const int mi = nd.m - int(nd.nu_x), ni = nd.n - int(nd.nu_y);
        for (int j = 1; j <= n_t; ++j, ++row) {
            const double wb =
                w[std::size_t(flat_index(nd.m - 1, nd.n - 1, j - 1, N, n_t))];
            const double wi = w[std::size_t(flat_index(mi - 1, ni - 1, j - 1, N, n_t))];
            CHECK(yd[std::size_t(row)] == wb);
            CHECK(yn[std::size_t(row)] ==
                  doctest::Approx((wb - wi) / g.space.dx).epsilon(1e-13));
            CHECK(cons.rhs_d[std::size_t(row)] == bd.zeta.at(k, j - 1));
            CHECK(cons.rhs_n[std::size_t(row)] == bd.xi.at(k, j - 1));
        }
    }

    CHECK_THROWS_AS(assemble_constraints(g, bd, Field2D(N, N - 1)), config_error);
    BoundaryData short_bd{TraceArray(K, n_t - 1), TraceArray(K, n_t - 1)};
    CHECK_THROWS_AS(assemble_constraints(g, short_bd, psi), config_error);
}

TEST_CASE("penalty blocks are forward differences along each axis") {
    const SpaceTimeGrid g = make_grid(7, 5);
    const int N = g.space.n, n_t = g.time.n_t;
    const Penalties pen = assemble_penalties(g);

    REQUIRE(pen.Dx.nrows == (N - 1) * N * n_t);
    REQUIRE(pen.Dy.nrows == N * (N - 1) * n_t);
    REQUIRE(pen.Dt.nrows == N * N * (n_t - 1));

    const std::vector<double> wx = sample_field(g, [](double x, double, double) { return x; });
    const std::vector<double> wy = sample_field(g, [](double, double y, double) { return y; });
    const std::vector<double> wt = sample_field(g, [](double, double, double t) { return t; });

    for (double v : pen.Dx.matvec(wx)) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : pen.Dx.matvec(wy)) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
    for (double v : pen.Dy.matvec(wy)) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : pen.Dt.matvec(wt)) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : pen.Dt.matvec(wx)) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

namespace {

// Shared fixture pieces for the stacked and normal systems.
struct SmallProblem {
    SpaceTimeGrid g;
    ConstraintBlocks cons;
    OperatorBlock op;
    Penalties pen;
    StackedSystem sys;
};

SmallProblem build_small() {
    SmallProblem s;
    s.g = make_grid(7, 5);
    static const DecayingExcitation h;
    const AuxiliaryHTilde ht = build_h_tilde(h, s.g);
    const auto nodes = boundary_nodes(s.g.space);
    const int K = int(nodes.size()), n_t = s.g.time.n_t, N = s.g.space.n;

    CounterRng rng(11, 0x7374616bu);
    TraceArray F(K, n_t), G(K, n_t);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < n_t; ++j) {
            F.at(k, j) = rng.symmetric(2 * (k * 64 + j));
            G.at(k, j) = rng.symmetric(2 * (k * 64 + j) + 1);
        }
    const BoundaryData bd = compute_boundary_data(F, G, ht, s.g);
    s.cons = assemble_constraints(s.g, bd, Field2D(N, N));
    s.op = assemble_wave_operator(s.g, ht, OperatorMode::full);
    s.pen = assemble_penalties(s.g);
    s.sys = stack_system(s.cons, s.op);
    return s;
}

} // namespace

TEST_CASE("stacked system concatenates the blocks in declared order") {
    const SmallProblem s = build_small();
    const int N = s.g.space.n, n_t = s.g.time.n_t;
    const int K = int(boundary_nodes(s.g.space).size());

    CHECK(s.sys.rows_dt == N * N);
    CHECK(s.sys.rows_d == K * n_t);
    CHECK(s.sys.rows_n == K * n_t);
    CHECK(s.sys.rows_l == (N - 2) * (N - 2) * (n_t - 2));
    CHECK(s.sys.C.nrows == s.sys.rows_dt + s.sys.rows_d + s.sys.rows_n + s.sys.rows_l);
    REQUIRE(std::int64_t(s.sys.b.size()) == s.sys.C.nrows);

    std::vector<double> expect_b;
    expect_b.insert(expect_b.end(), s.cons.rhs_dt.begin(), s.cons.rhs_dt.end());
    expect_b.insert(expect_b.end(), s.cons.rhs_d.begin(), s.cons.rhs_d.end());
    expect_b.insert(expect_b.end(), s.cons.rhs_n.begin(), s.cons.rhs_n.end());
    expect_b.insert(expect_b.end(), s.op.rhs.begin(), s.op.rhs.end());
    CHECK(s.sys.b == expect_b);

    CounterRng rng(5, 0x76656374u);
    std::vector<double> w(std::size_t(s.g.unknowns()));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.symmetric(i);

    const std::vector<double> yc = s.sys.C.matvec(w);
    std::vector<double> expect;
    for (const Csr* blk : {&s.cons.Dt, &s.cons.D, &s.cons.N, &s.op.L}) {
        const std::vector<double> yb = blk->matvec(w);
        expect.insert(expect.end(), yb.begin(), yb.end());
    }
    REQUIRE(yc.size() == expect.size());
    for (std::size_t i = 0; i < yc.size(); ++i) CHECK(yc[i] == expect[i]);
}

TEST_CASE("normal system equals a dense mirror of the regularized equations") {
    const SmallProblem s = build_small();
    const double eps1 = 3e-3, eps2 = 1.5e-4;
    const NormalSystem ns = assemble_normal_system(s.sys, s.pen, eps1, eps2);
    const int n = s.sys.C.ncols;
    REQUIRE(ns.M.nrows == n);
    REQUIRE(ns.M.ncols == n);
    CHECK(ns.eps1 == eps1);
    CHECK(ns.eps2 == eps2);

    const double sq = std::sqrt(eps2);
    std::vector<std::vector<double>> blocks[] = {to_dense(s.sys.C), to_dense(s.pen.Dx),
                                                 to_dense(s.pen.Dy), to_dense(s.pen.Dt)};
    std::vector<std::vector<double>> e;
    for (int bi = 0; bi < 4; ++bi)
        for (auto& r : blocks[bi]) {
            if (bi > 0)
                for (auto& v : r) v *= sq;
            e.push_back(std::move(r));
        }

    const std::size_t un = std::size_t(n);
    std::vector<std::vector<double>> md(un, std::vector<double>(un, 0.0));
    for (std::size_t r = 0; r < e.size(); ++r)
        for (int i = 0; i < n; ++i) {
            const double ei = e[r][std::size_t(i)];
            if (ei == 0.0) continue;
            for (int j = 0; j < n; ++j)
                md[std::size_t(i)][std::size_t(j)] += ei * e[r][std::size_t(j)];
        }
    for (int i = 0; i < n; ++i) md[std::size_t(i)][std::size_t(i)] += eps1;

    const auto got = to_dense(ns.M);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            worst = std::max(worst,
                             std::abs(got[std::size_t(i)][std::size_t(j)] -
                                      md[std::size_t(i)][std::size_t(j)]));
    CHECK(worst <= 1e-11);

    std::vector<double> rhs_dense(std::size_t(n), 0.0);
    const auto cd = to_dense(s.sys.C);
    for (std::size_t r = 0; r < cd.size(); ++r)
        for (int i = 0; i < n; ++i)
            rhs_dense[std::size_t(i)] += cd[r][std::size_t(i)] * s.sys.b[r];
    REQUIRE(ns.rhs.size() == rhs_dense.size());
    for (int i = 0; i < n; ++i)
        CHECK(ns.rhs[std::size_t(i)] ==
              doctest::Approx(rhs_dense[std::size_t(i)]).epsilon(1e-11));
}

TEST_CASE("normal system is symmetric and strictly positive definite") {
    const SmallProblem s = build_small();
    const NormalSystem ns = assemble_normal_system(s.sys, s.pen, 3e-3, 1.5e-4);

    const Csr mt = transpose(ns.M);
    CHECK(mt.ptr == ns.M.ptr);
    CHECK(mt.col == ns.M.col);
    CHECK(std::memcmp(mt.val.data(), ns.M.val.data(), mt.val.size() * sizeof(double)) == 0);

    const std::size_t n = std::size_t(ns.M.nrows);
    for (int trial = 0; trial < 20; ++trial) {
        CounterRng rng(std::uint64_t(trial), 0x73706465u);
        std::vector<double> x(n);
        double nx2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.symmetric(i);
            nx2 += x[i] * x[i];
        }
        const std::vector<double> mx = ns.M.matvec(x);
        double quad = 0.0;
        for (std::size_t i = 0; i < n; ++i) quad += x[i] * mx[i];
        CHECK(quad >= 3e-3 * nx2 * (1.0 - 1e-12));
    }
}

TEST_CASE("normal system respects the regularization switches") {
    const SmallProblem s = build_small();

    const NormalSystem no2 = assemble_normal_system(s.sys, s.pen, 1e-2, 0.0);
    const auto cd = to_dense(s.sys.C);
    const int n = s.sys.C.ncols;
    const std::size_t un = std::size_t(n);
    std::vector<std::vector<double>> md(un, std::vector<double>(un, 0.0));
    for (std::size_t r = 0; r < cd.size(); ++r)
        for (int i = 0; i < n; ++i) {
            if (cd[r][std::size_t(i)] == 0.0) continue;
            for (int j = 0; j < n; ++j)
                md[std::size_t(i)][std::size_t(j)] +=
                    cd[r][std::size_t(i)] * cd[r][std::size_t(j)];
        }
    for (int i = 0; i < n; ++i) md[std::size_t(i)][std::size_t(i)] += 1e-2;
    const auto got = to_dense(no2.M);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            worst = std::max(worst,
                             std::abs(got[std::size_t(i)][std::size_t(j)] -
                                      md[std::size_t(i)][std::size_t(j)]));
    CHECK(worst <= 1e-11);

    CHECK_THROWS_AS(assemble_normal_system(s.sys, s.pen, -1e-3, 1.5e-4), config_error);
    CHECK_THROWS_AS(assemble_normal_system(s.sys, s.pen, 3e-3, -1e-4), config_error);
    CHECK_THROWS_AS(assemble_normal_system(s.sys, s.pen, 3e-3, 1.5e-4, true), config_error);
}

TEST_CASE("verbatim right-hand side passes through for a square system") {
    CooBuilder bld(3, 3);
    bld.add(0, 0, 2.0);
    bld.add(0, 1, -1.0);
    bld.add(1, 1, 3.0);
    bld.add(2, 0, 0.5);
    bld.add(2, 2, 1.5);

    StackedSystem sys;
    sys.C = bld.build();
    sys.b = {1.0, 2.0, 3.0};
    sys.rows_l = 3;

    const NormalSystem ns = assemble_normal_system(sys, Penalties{}, 1e-3, 0.0, true);
    CHECK(ns.rhs == sys.b);

    const NormalSystem ls = assemble_normal_system(sys, Penalties{}, 1e-3, 0.0, false);
    const std::vector<double> expect = {2.0 * 1.0 + 0.5 * 3.0, -1.0 * 1.0 + 3.0 * 2.0,
                                        1.5 * 3.0};
    REQUIRE(ls.rhs.size() == expect.size());
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(ls.rhs[i] == doctest::Approx(expect[i]).epsilon(1e-15));
}
