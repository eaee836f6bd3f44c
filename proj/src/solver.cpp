#include "wavesrc/solver.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <sstream>

#include "wavesrc/dense.hpp"
#include "wavesrc/errors.hpp"
#include "wavesrc/rng.hpp"

namespace wavesrc {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Batched kernels keep per-column summation order identical to the unbatched
// code paths, so a lockstep solve reproduces single solves bit for bit. The
// column count is a template parameter so the per-entry inner loops unroll
// and vectorize; unused trailing lanes carry zeros.
constexpr int kMaxBatch = 32;

template <int W>
void matvec_batch(const Csr& M, const double* X, double* Y) {
    double acc[W];
    for (int i = 0; i < M.nrows; ++i) {
        for (int c = 0; c < W; ++c) acc[c] = 0.0;
        for (std::int64_t k = M.ptr[i]; k < M.ptr[i + 1]; ++k) {
            const double v = M.val[std::size_t(k)];
            const double* xr = X + std::size_t(M.col[std::size_t(k)]) * W;
            for (int c = 0; c < W; ++c) acc[c] += v * xr[c];
        }
        double* yr = Y + std::size_t(i) * W;
        for (int c = 0; c < W; ++c) yr[c] = acc[c];
    }
}

template <int W>
void dots_batch(const double* A, const double* B, std::size_t n, double* out) {
    double acc[W];
    for (int c = 0; c < W; ++c) acc[c] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* ar = A + i * W;
        const double* br = B + i * W;
        for (int c = 0; c < W; ++c) acc[c] += ar[c] * br[c];
    }
    for (int c = 0; c < W; ++c) out[c] = acc[c];
}

void check_square(const Csr& M, const std::vector<double>& b) {
    if (M.nrows != M.ncols) {
        std::ostringstream os;
        os << "solver needs a square matrix, got " << M.nrows << "x" << M.ncols;
        throw config_error(os.str());
    }
    if (std::int64_t(b.size()) != M.nrows)
        throw config_error("right-hand side length does not match the matrix");
}

void probe_symmetry(const Csr& M) {
    const std::size_t n = std::size_t(M.nrows);
    CounterRng rng(0x5ca1ab1eu, rng_stage::noise_f);
    std::vector<double> u(n), v(n), Mu(n), Mv(n);
    for (int probe = 0; probe < 3; ++probe) {
        const std::uint64_t base = std::uint64_t(probe) * 2 * n;
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = rng.symmetric(base + i);
            v[i] = rng.symmetric(base + n + i);
        }
        M.matvec(u.data(), Mu.data());
        M.matvec(v.data(), Mv.data());
        const double lhs = dot(u, Mv), rhs = dot(v, Mu);
        const double scale = norm2(u) * norm2(Mv) + norm2(v) * norm2(Mu) + 1e-30;
        if (std::abs(lhs - rhs) > 1e-10 * scale)
            throw numeric_error("matrix fails the symmetry probe; the normal system "
                                "must be symmetric");
    }
}

struct JacobiPrec {
    std::vector<double> inv_diag;

    explicit JacobiPrec(const Csr& M) {
        inv_diag = M.diagonal();
        for (std::size_t i = 0; i < inv_diag.size(); ++i) {
            if (!(inv_diag[i] > 0.0)) {
                std::ostringstream os;
                os << "Jacobi preconditioner needs a positive diagonal, entry " << i
                   << " is " << inv_diag[i];
                throw numeric_error(os.str());
            }
            inv_diag[i] = 1.0 / inv_diag[i];
        }
    }

    void apply(const std::vector<double>& r, std::vector<double>& z) const {
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] * inv_diag[i];
    }

    template <int W>
    void apply_batch(const double* R, double* Z) const {
        for (std::size_t i = 0; i < inv_diag.size(); ++i) {
            const double d = inv_diag[i];
            for (int c = 0; c < W; ++c) Z[i * W + c] = R[i * W + c] * d;
        }
    }
};

// Incomplete Cholesky with zero fill on the lower-triangular pattern of M.
// The factorization can break down on matrices that are positive definite but
// not M-matrices; a growing diagonal shift (factor M + shift*diag(M)) is
// retried until it succeeds.
struct Ic0Prec {
    Csr L, Lt;
    std::vector<double> dinv_sqrt; // symmetric equilibration to unit diagonal
    double shift_used = 0.0;

    explicit Ic0Prec(const Csr& M) {
        const int n = M.nrows;
        dinv_sqrt = M.diagonal();
        for (std::size_t i = 0; i < dinv_sqrt.size(); ++i) {
            if (!(dinv_sqrt[i] > 0.0)) {
                std::ostringstream os;
                os << "incomplete factorization needs a positive diagonal, entry " << i
                   << " is " << dinv_sqrt[i];
                throw numeric_error(os.str());
            }
            dinv_sqrt[i] = 1.0 / std::sqrt(dinv_sqrt[i]);
        }
        CooBuilder low(n, n);
        for (int i = 0; i < n; ++i)
            for (std::int64_t p = M.ptr[i]; p < M.ptr[i + 1]; ++p) {
                const int c = M.col[std::size_t(p)];
                if (c <= i)
                    low.add(i, c,
                            M.val[std::size_t(p)] * dinv_sqrt[std::size_t(i)] *
                                dinv_sqrt[std::size_t(c)]);
            }
        const Csr low0 = low.build();

        for (double shift : {0.0, 1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2, 3.2e-2, 6.4e-2, 0.128,
                             0.256, 0.512, 1.0, 2.0}) {
            if (try_factor(low0, shift)) {
                shift_used = shift;
                Lt = transpose(L);
                return;
            }
        }
        throw numeric_error("incomplete factorization broke down even with a "
                            "diagonal shift; use the Jacobi preconditioner");
    }

    bool try_factor(const Csr& low0, double shift) {
        L = low0;
        const int n = L.nrows;
        if (shift > 0.0)
            for (int i = 0; i < n; ++i) {
                const std::int64_t d = L.ptr[i + 1] - 1;
                L.val[std::size_t(d)] *= 1.0 + shift;
            }
        for (int i = 0; i < n; ++i) {
            const std::int64_t ibeg = L.ptr[i], iend = L.ptr[i + 1];
            if (iend == ibeg || L.col[std::size_t(iend - 1)] != i)
                throw numeric_error("incomplete factorization needs every diagonal "
                                    "entry present");
            for (std::int64_t p = ibeg; p < iend; ++p) {
                const int k = L.col[std::size_t(p)];
                const std::int64_t kbeg = L.ptr[k], kend = L.ptr[k + 1];
                // dot of rows i and k over shared columns < k
                double s = 0.0;
                std::int64_t pi = ibeg, pk = kbeg;
                while (pi < p && pk < kend - 1) {
                    const int ci = L.col[std::size_t(pi)], ck = L.col[std::size_t(pk)];
                    if (ci == ck) {
                        s += L.val[std::size_t(pi)] * L.val[std::size_t(pk)];
                        ++pi;
                        ++pk;
                    } else if (ci < ck) {
                        ++pi;
                    } else {
                        ++pk;
                    }
                }
                if (k == i) {
                    const double d = L.val[std::size_t(p)] - s;
                    if (!(d > 0.0)) return false;
                    L.val[std::size_t(p)] = std::sqrt(d);
                } else {
                    const double lkk = L.val[std::size_t(kend - 1)];
                    L.val[std::size_t(p)] = (L.val[std::size_t(p)] - s) / lkk;
                }
            }
        }
        return true;
    }

    void apply(const std::vector<double>& r, std::vector<double>& z) const {
        const int n = L.nrows;
        static thread_local std::vector<double> y;
        y.assign(std::size_t(n), 0.0);
        for (int i = 0; i < n; ++i) {
            double s = r[std::size_t(i)] * dinv_sqrt[std::size_t(i)];
            const std::int64_t end = L.ptr[i + 1] - 1; // diagonal is last
            for (std::int64_t p = L.ptr[i]; p < end; ++p)
                s -= L.val[std::size_t(p)] * y[std::size_t(L.col[std::size_t(p)])];
            y[std::size_t(i)] = s / L.val[std::size_t(end)];
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = y[std::size_t(i)];
            const std::int64_t beg = Lt.ptr[i] + 1; // diagonal is first
            for (std::int64_t p = beg; p < Lt.ptr[i + 1]; ++p)
                s -= Lt.val[std::size_t(p)] * y[std::size_t(Lt.col[std::size_t(p)])];
            y[std::size_t(i)] = s / Lt.val[std::size_t(Lt.ptr[i])];
        }
        for (int i = 0; i < n; ++i)
            z[std::size_t(i)] = y[std::size_t(i)] * dinv_sqrt[std::size_t(i)];
    }

    template <int W>
    void apply_batch(const double* R, double* Z) const {
        const int n = L.nrows;
        static thread_local std::vector<double> yb;
        yb.resize(std::size_t(n) * W);
        double acc[W];
        for (int i = 0; i < n; ++i) {
            const double ds = dinv_sqrt[std::size_t(i)];
            for (int c = 0; c < W; ++c) acc[c] = R[std::size_t(i) * W + c] * ds;
            const std::int64_t end = L.ptr[i + 1] - 1; // diagonal is last
            for (std::int64_t p = L.ptr[i]; p < end; ++p) {
                const double v = L.val[std::size_t(p)];
                const double* yr = yb.data() + std::size_t(L.col[std::size_t(p)]) * W;
                for (int c = 0; c < W; ++c) acc[c] -= v * yr[c];
            }
            const double d = L.val[std::size_t(end)];
            for (int c = 0; c < W; ++c) yb[std::size_t(i) * W + c] = acc[c] / d;
        }
        for (int i = n - 1; i >= 0; --i) {
            for (int c = 0; c < W; ++c) acc[c] = yb[std::size_t(i) * W + c];
            const std::int64_t beg = Lt.ptr[i] + 1; // diagonal is first
            for (std::int64_t p = beg; p < Lt.ptr[i + 1]; ++p) {
                const double v = Lt.val[std::size_t(p)];
                const double* yr = yb.data() + std::size_t(Lt.col[std::size_t(p)]) * W;
                for (int c = 0; c < W; ++c) acc[c] -= v * yr[c];
            }
            const double d = Lt.val[std::size_t(Lt.ptr[i])];
            for (int c = 0; c < W; ++c) yb[std::size_t(i) * W + c] = acc[c] / d;
        }
        for (int i = 0; i < n; ++i) {
            const double ds = dinv_sqrt[std::size_t(i)];
            for (int c = 0; c < W; ++c) Z[std::size_t(i) * W + c] = yb[std::size_t(i) * W + c] * ds;
        }
    }
};

// Threshold-fill incomplete Cholesky in Crout (column) order on the
// equilibrated matrix: per column keep at most max_fill off-diagonal entries
// with |L_ij| >= drop, stored column-compressed with the diagonal first.
struct IctPrec {
    std::vector<std::int64_t> colptr;
    std::vector<std::int32_t> rowidx;
    std::vector<double> val;
    std::vector<double> dinv_sqrt;
    double shift_used = 0.0;
    int n = 0;

    IctPrec(const Csr& M, double drop, int max_fill) : n(M.nrows) {
        if (!(drop >= 0.0) || max_fill < 1)
            throw config_error("ict needs drop >= 0 and max_fill >= 1");
        dinv_sqrt = M.diagonal();
        for (std::size_t i = 0; i < dinv_sqrt.size(); ++i) {
            if (!(dinv_sqrt[i] > 0.0)) {
                std::ostringstream os;
                os << "incomplete factorization needs a positive diagonal, entry " << i
                   << " is " << dinv_sqrt[i];
                throw numeric_error(os.str());
            }
            dinv_sqrt[i] = 1.0 / std::sqrt(dinv_sqrt[i]);
        }
        for (double shift : {0.0, 1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2, 3.2e-2, 6.4e-2, 0.128,
                             0.256, 0.512, 1.0, 2.0}) {
            if (try_factor(M, drop, max_fill, shift)) {
                shift_used = shift;
                return;
            }
        }
        throw numeric_error("incomplete factorization broke down even with a "
                            "diagonal shift; use the Jacobi preconditioner");
    }

    bool try_factor(const Csr& M, double drop, int max_fill, double shift) {
        colptr.assign(1, 0);
        rowidx.clear();
        val.clear();
        rowidx.reserve(std::size_t(n) * std::size_t(std::min(max_fill + 1, 48)));
        val.reserve(rowidx.capacity());
        // head/next: linked lists of columns whose next unconsumed entry sits in a
        // given row; pos: that entry's index inside the column.
        std::vector<int> head(std::size_t(n), -1), next(std::size_t(n), -1);
        std::vector<std::int64_t> pos(std::size_t(n), 0);
        std::vector<double> w(std::size_t(n), 0.0);
        std::vector<char> mark(std::size_t(n), 0);
        std::vector<std::int32_t> touched;
        touched.reserve(256);
        std::vector<std::pair<double, std::int32_t>> cand;
        cand.reserve(256);

        for (int j = 0; j < n; ++j) {
            touched.clear();
            // column j of the scaled lower triangle = tail of row j
            for (std::int64_t p = M.ptr[j]; p < M.ptr[j + 1]; ++p) {
                const int c = M.col[std::size_t(p)];
                if (c < j) continue;
                double v = M.val[std::size_t(p)] * dinv_sqrt[std::size_t(j)] *
                           dinv_sqrt[std::size_t(c)];
                if (c == j) v *= 1.0 + shift;
                w[std::size_t(c)] = v;
                mark[std::size_t(c)] = 1;
                touched.push_back(std::int32_t(c));
            }
            // subtract L[j][k] * L[:,k] for every finalized column k with a row-j entry
            int k = head[std::size_t(j)];
            while (k != -1) {
                const int k_next = next[std::size_t(k)];
                const double ljk = val[std::size_t(pos[std::size_t(k)])];
                for (std::int64_t q = pos[std::size_t(k)]; q < colptr[std::size_t(k) + 1];
                     ++q) {
                    const std::int32_t i = rowidx[std::size_t(q)];
                    if (!mark[std::size_t(i)]) {
                        mark[std::size_t(i)] = 1;
                        w[std::size_t(i)] = 0.0;
                        touched.push_back(i);
                    }
                    w[std::size_t(i)] -= ljk * val[std::size_t(q)];
                }
                pos[std::size_t(k)] += 1;
                if (pos[std::size_t(k)] < colptr[std::size_t(k) + 1]) {
                    const std::int32_t r = rowidx[std::size_t(pos[std::size_t(k)])];
                    next[std::size_t(k)] = head[std::size_t(r)];
                    head[std::size_t(r)] = k;
                }
                k = k_next;
            }

            const double d = w[std::size_t(j)];
            if (!(d > 0.0)) {
                for (std::int32_t i : touched) mark[std::size_t(i)] = 0;
                return false;
            }
            const double ljj = std::sqrt(d);

            cand.clear();
            for (std::int32_t i : touched) {
                mark[std::size_t(i)] = 0;
                if (i <= j) continue;
                const double lij = w[std::size_t(i)] / ljj;
                if (std::abs(lij) >= drop) cand.emplace_back(lij, i);
            }
            if (int(cand.size()) > max_fill) {
                std::partial_sort(cand.begin(), cand.begin() + max_fill, cand.end(),
                                  [](const auto& a, const auto& b) {
                                      const double ma = std::abs(a.first),
                                                   mb = std::abs(b.first);
                                      if (ma != mb) return ma > mb;
                                      return a.second < b.second;
                                  });
                cand.resize(std::size_t(max_fill));
            }
            std::sort(cand.begin(), cand.end(),
                      [](const auto& a, const auto& b) { return a.second < b.second; });

            rowidx.push_back(std::int32_t(j));
            val.push_back(ljj);
            for (const auto& [lv, ri] : cand) {
                rowidx.push_back(ri);
                val.push_back(lv);
            }
            colptr.push_back(std::int64_t(rowidx.size()));
            if (colptr[std::size_t(j)] + 1 < colptr[std::size_t(j) + 1]) {
                pos[std::size_t(j)] = colptr[std::size_t(j)] + 1;
                const std::int32_t r = rowidx[std::size_t(pos[std::size_t(j)])];
                next[std::size_t(j)] = head[std::size_t(r)];
                head[std::size_t(r)] = j;
            }
        }
        return true;
    }

    void apply(const std::vector<double>& r, std::vector<double>& z) const {
        static thread_local std::vector<double> y;
        y.resize(std::size_t(n));
        for (int i = 0; i < n; ++i)
            y[std::size_t(i)] = r[std::size_t(i)] * dinv_sqrt[std::size_t(i)];
        for (int j = 0; j < n; ++j) {
            const std::int64_t beg = colptr[std::size_t(j)];
            const double yj = y[std::size_t(j)] / val[std::size_t(beg)];
            y[std::size_t(j)] = yj;
            for (std::int64_t q = beg + 1; q < colptr[std::size_t(j) + 1]; ++q)
                y[std::size_t(rowidx[std::size_t(q)])] -= val[std::size_t(q)] * yj;
        }
        for (int j = n - 1; j >= 0; --j) {
            const std::int64_t beg = colptr[std::size_t(j)];
            double s = y[std::size_t(j)];
            for (std::int64_t q = beg + 1; q < colptr[std::size_t(j) + 1]; ++q)
                s -= val[std::size_t(q)] * y[std::size_t(rowidx[std::size_t(q)])];
            y[std::size_t(j)] = s / val[std::size_t(beg)];
        }
        for (int i = 0; i < n; ++i)
            z[std::size_t(i)] = y[std::size_t(i)] * dinv_sqrt[std::size_t(i)];
    }

    template <int W>
    void apply_batch(const double* R, double* Z) const {
        static thread_local std::vector<double> yb;
        yb.resize(std::size_t(n) * W);
        double acc[W];
        for (int i = 0; i < n; ++i) {
            const double ds = dinv_sqrt[std::size_t(i)];
            for (int c = 0; c < W; ++c) yb[std::size_t(i) * W + c] = R[std::size_t(i) * W + c] * ds;
        }
        for (int j = 0; j < n; ++j) {
            const std::int64_t beg = colptr[std::size_t(j)];
            const double d = val[std::size_t(beg)];
            double* yj = yb.data() + std::size_t(j) * W;
            for (int c = 0; c < W; ++c) yj[c] /= d;
            for (std::int64_t q = beg + 1; q < colptr[std::size_t(j) + 1]; ++q) {
                const double v = val[std::size_t(q)];
                double* yr = yb.data() + std::size_t(rowidx[std::size_t(q)]) * W;
                for (int c = 0; c < W; ++c) yr[c] -= v * yj[c];
            }
        }
        for (int j = n - 1; j >= 0; --j) {
            const std::int64_t beg = colptr[std::size_t(j)];
            for (int c = 0; c < W; ++c) acc[c] = yb[std::size_t(j) * W + c];
            for (std::int64_t q = beg + 1; q < colptr[std::size_t(j) + 1]; ++q) {
                const double v = val[std::size_t(q)];
                const double* yr = yb.data() + std::size_t(rowidx[std::size_t(q)]) * W;
                for (int c = 0; c < W; ++c) acc[c] -= v * yr[c];
            }
            const double d = val[std::size_t(beg)];
            for (int c = 0; c < W; ++c) yb[std::size_t(j) * W + c] = acc[c] / d;
        }
        for (int i = 0; i < n; ++i) {
            const double ds = dinv_sqrt[std::size_t(i)];
            for (int c = 0; c < W; ++c) Z[std::size_t(i) * W + c] = yb[std::size_t(i) * W + c] * ds;
        }
    }
};

} // namespace

namespace {

// Preconditioner state shared between the single-system and lockstep drivers,
// so a multi right-hand-side call factors the matrix once per call.
struct PrecondSet {
    std::unique_ptr<JacobiPrec> jac;
    std::unique_ptr<Ic0Prec> ic;
    std::unique_ptr<IctPrec> ict;
    std::string method = "cg";
};

PrecondSet make_precond(const Csr& M, const CgConfig& cfg) {
    PrecondSet pre;
    if (cfg.precond == Preconditioner::jacobi) {
        pre.jac = std::make_unique<JacobiPrec>(M);
        pre.method = "cg+jacobi";
    } else if (cfg.precond == Preconditioner::ic0) {
        pre.ic = std::make_unique<Ic0Prec>(M);
        pre.method = "cg+ic0";
        if (pre.ic->shift_used > 0.0) {
            std::ostringstream os;
            os << "cg+ic0(shift=" << pre.ic->shift_used << ")";
            pre.method = os.str();
        }
    } else if (cfg.precond == Preconditioner::ict) {
        pre.ict = std::make_unique<IctPrec>(M, cfg.ict_drop, cfg.ict_max_fill);
        std::ostringstream os;
        os << "cg+ict(drop=" << cfg.ict_drop << ",fill=" << cfg.ict_max_fill;
        if (pre.ict->shift_used > 0.0) os << ",shift=" << pre.ict->shift_used;
        os << ")";
        pre.method = os.str();
    }
    return pre;
}

std::vector<double> cg_solve_impl(const Csr& M, const std::vector<double>& b,
                                  const std::vector<double>* x0, const CgConfig& cfg,
                                  SolveStats* stats) {
    const auto t0 = std::chrono::steady_clock::now();
    check_square(M, b);
    if (cfg.tol_rel <= 0.0 || cfg.tol_rel >= 1.0)
        throw config_error("solver tolerance must lie in (0,1)");
    if (cfg.check_symmetry) probe_symmetry(M);

    const std::size_t n = std::size_t(M.nrows);
    std::int64_t max_iters = cfg.max_iters;
    if (max_iters <= 0)
        max_iters = 20 * std::int64_t(std::ceil(std::sqrt(double(std::max<std::size_t>(n, 1)))));

    const PrecondSet pre = make_precond(M, cfg);
    auto precond = [&](const std::vector<double>& r, std::vector<double>& z) {
        if (pre.jac)
            pre.jac->apply(r, z);
        else if (pre.ic)
            pre.ic->apply(r, z);
        else if (pre.ict)
            pre.ict->apply(r, z);
        else
            z = r;
    };

    std::vector<double> x(n, 0.0);
    const double bnorm = norm2(b);
    std::int64_t iters = 0;
    bool converged = false;

    if (bnorm == 0.0) {
        converged = true;
    } else {
        std::vector<double> r(n), z(n), p(n), Mp(n);
        if (x0 != nullptr && !x0->empty()) {
            if (x0->size() != n)
                throw config_error("initial guess length does not match the system");
            x = *x0;
            M.matvec(x.data(), r.data());
            for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
        } else {
            r = b;
        }
        precond(r, z);
        p = z;
        double rz = dot(r, z);
        double rnorm = norm2(r);
        const double target = cfg.tol_rel * bnorm;
        while (iters < max_iters && rnorm > target) {
            M.matvec(p.data(), Mp.data());
            const double pMp = dot(p, Mp);
            if (!std::isfinite(pMp) || pMp <= 0.0) {
                std::ostringstream os;
                os << "conjugate gradient breakdown at iteration " << iters
                   << " (p'Mp=" << pMp << "); the matrix is not positive definite";
                throw numeric_error(os.str());
            }
            const double alpha = rz / pMp;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * Mp[i];
            }
            precond(r, z);
            const double rz_new = dot(r, z);
            if (!std::isfinite(rz_new))
                throw numeric_error("conjugate gradient produced a non-finite residual");
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
            rnorm = norm2(r);
            ++iters;
            if (cfg.progress_every > 0 && cfg.progress && iters % cfg.progress_every == 0)
                cfg.progress(iters, rnorm / bnorm);
        }
        converged = rnorm <= target;
    }

    if (stats) {
        std::vector<double> res(n);
        M.matvec(x.data(), res.data());
        for (std::size_t i = 0; i < n; ++i) res[i] = b[i] - res[i];
        stats->iters = iters;
        stats->rel_residual = bnorm > 0.0 ? norm2(res) / bnorm : norm2(res);
        stats->converged = converged;
        stats->seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        stats->nnz = M.nnz();
        stats->method = pre.method;
    }
    return x;
}

// One lockstep chunk of a multi right-hand-side solve. W is the compile-time
// lane count, s <= W the number of live columns; trailing lanes carry zero
// right-hand sides and freeze immediately, so every live column follows the
// exact scalar recurrence of a standalone cg_solve. Converged columns are
// skipped through the active list instead of a zero step so their iterates
// stay untouched bit for bit.
template <int W>
void cg_batch(const Csr& M, const std::vector<std::vector<double>>& rhs, std::size_t off,
              int s, const PrecondSet& pre, const CgConfig& cfg,
              std::vector<std::vector<double>>& out, std::vector<SolveStats>* stats) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = std::size_t(M.nrows);
    std::int64_t max_iters = cfg.max_iters;
    if (max_iters <= 0)
        max_iters = 20 * std::int64_t(std::ceil(std::sqrt(double(std::max<std::size_t>(n, 1)))));

    auto precond_batch = [&](const double* R, double* Z) {
        if (pre.jac)
            pre.jac->template apply_batch<W>(R, Z);
        else if (pre.ic)
            pre.ic->template apply_batch<W>(R, Z);
        else if (pre.ict)
            pre.ict->template apply_batch<W>(R, Z);
        else
            std::copy(R, R + n * std::size_t(W), Z);
    };

    std::vector<double> X(n * W, 0.0), R(n * W, 0.0), Z(n * W), P(n * W), MP(n * W);
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < s; ++c) R[i * W + std::size_t(c)] = rhs[off + std::size_t(c)][i];

    std::vector<double> bnorm(W), target(W), rz(W), rnorm(W), alpha(W), scratch(W);
    std::vector<std::int64_t> iters(W, 0);
    std::vector<char> converged(W, 0);

    dots_batch<W>(R.data(), R.data(), n, bnorm.data());
    std::vector<int> act;
    for (int c = 0; c < s; ++c) {
        bnorm[std::size_t(c)] = std::sqrt(bnorm[std::size_t(c)]);
        target[std::size_t(c)] = cfg.tol_rel * bnorm[std::size_t(c)];
        if (bnorm[std::size_t(c)] == 0.0)
            converged[std::size_t(c)] = 1;
        else
            act.push_back(c);
    }

    if (!act.empty()) {
        precond_batch(R.data(), Z.data());
        P = Z;
        dots_batch<W>(R.data(), Z.data(), n, rz.data());
        dots_batch<W>(R.data(), R.data(), n, scratch.data());
        for (int c : act) rnorm[std::size_t(c)] = std::sqrt(scratch[std::size_t(c)]);
        std::int64_t blk_it = 0;
        while (!act.empty() && blk_it < max_iters) {
            matvec_batch<W>(M, P.data(), MP.data());
            dots_batch<W>(P.data(), MP.data(), n, scratch.data());
            for (int c : act) {
                const double pMp = scratch[std::size_t(c)];
                if (!std::isfinite(pMp) || pMp <= 0.0) {
                    std::ostringstream os;
                    os << "conjugate gradient breakdown at iteration " << blk_it
                       << " (p'Mp=" << pMp << "); the matrix is not positive definite";
                    throw numeric_error(os.str());
                }
                alpha[std::size_t(c)] = rz[std::size_t(c)] / pMp;
            }
            for (std::size_t i = 0; i < n; ++i) {
                double* xr = X.data() + i * W;
                double* rr = R.data() + i * W;
                const double* pr = P.data() + i * W;
                const double* mr = MP.data() + i * W;
                for (int c : act) {
                    xr[c] += alpha[std::size_t(c)] * pr[c];
                    rr[c] -= alpha[std::size_t(c)] * mr[c];
                }
            }
            precond_batch(R.data(), Z.data());
            dots_batch<W>(R.data(), Z.data(), n, scratch.data());
            for (int c : act) {
                if (!std::isfinite(scratch[std::size_t(c)]))
                    throw numeric_error("conjugate gradient produced a non-finite residual");
                alpha[std::size_t(c)] = scratch[std::size_t(c)] / rz[std::size_t(c)]; // beta
                rz[std::size_t(c)] = scratch[std::size_t(c)];
            }
            for (std::size_t i = 0; i < n; ++i) {
                double* pr = P.data() + i * W;
                const double* zr = Z.data() + i * W;
                for (int c : act) pr[c] = zr[c] + alpha[std::size_t(c)] * pr[c];
            }
            dots_batch<W>(R.data(), R.data(), n, scratch.data());
            ++blk_it;
            double worst = 0.0;
            for (int c : act) {
                rnorm[std::size_t(c)] = std::sqrt(scratch[std::size_t(c)]);
                iters[std::size_t(c)] = blk_it;
                worst = std::max(worst, rnorm[std::size_t(c)] / bnorm[std::size_t(c)]);
            }
            if (cfg.progress_every > 0 && cfg.progress && blk_it % cfg.progress_every == 0)
                cfg.progress(blk_it, worst);
            std::vector<int> still;
            for (int c : act) {
                if (rnorm[std::size_t(c)] <= target[std::size_t(c)])
                    converged[std::size_t(c)] = 1;
                else
                    still.push_back(c);
            }
            act.swap(still);
        }
    }

    matvec_batch<W>(M, X.data(), MP.data());
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < s; ++c)
            MP[i * W + std::size_t(c)] = rhs[off + std::size_t(c)][i] - MP[i * W + std::size_t(c)];
    dots_batch<W>(MP.data(), MP.data(), n, scratch.data());
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (int c = 0; c < s; ++c) {
        out[off + std::size_t(c)].resize(n);
        for (std::size_t i = 0; i < n; ++i) out[off + std::size_t(c)][i] = X[i * W + std::size_t(c)];
        if (stats) {
            SolveStats& st = (*stats)[off + std::size_t(c)];
            st.iters = iters[std::size_t(c)];
            const double res = std::sqrt(scratch[std::size_t(c)]);
            st.rel_residual = bnorm[std::size_t(c)] > 0.0 ? res / bnorm[std::size_t(c)] : res;
            st.converged = converged[std::size_t(c)] != 0;
            st.seconds = secs;
            st.nnz = M.nnz();
            st.method = pre.method;
        }
    }
}

} // namespace

std::vector<double> cg_solve(const Csr& M, const std::vector<double>& b,
                             const CgConfig& cfg, SolveStats* stats) {
    return cg_solve_impl(M, b, nullptr, cfg, stats);
}

std::vector<double> cg_solve(const Csr& M, const std::vector<double>& b,
                             const std::vector<double>& x0, const CgConfig& cfg,
                             SolveStats* stats) {
    return cg_solve_impl(M, b, &x0, cfg, stats);
}

std::vector<std::vector<double>> cg_solve_multi(const Csr& M,
                                                const std::vector<std::vector<double>>& rhs,
                                                const CgConfig& cfg,
                                                std::vector<SolveStats>* stats) {
    if (cfg.tol_rel <= 0.0 || cfg.tol_rel >= 1.0)
        throw config_error("solver tolerance must lie in (0,1)");
    for (const auto& b : rhs) check_square(M, b);
    std::vector<std::vector<double>> out(rhs.size());
    if (stats) stats->assign(rhs.size(), SolveStats{});
    if (rhs.empty()) return out;
    if (cfg.check_symmetry) probe_symmetry(M);
    const PrecondSet pre = make_precond(M, cfg);
    std::size_t off = 0;
    while (off < rhs.size()) {
        const int s = int(std::min<std::size_t>(kMaxBatch, rhs.size() - off));
        if (s <= 1)
            cg_batch<1>(M, rhs, off, s, pre, cfg, out, stats);
        else if (s <= 2)
            cg_batch<2>(M, rhs, off, s, pre, cfg, out, stats);
        else if (s <= 4)
            cg_batch<4>(M, rhs, off, s, pre, cfg, out, stats);
        else if (s <= 8)
            cg_batch<8>(M, rhs, off, s, pre, cfg, out, stats);
        else if (s <= 16)
            cg_batch<16>(M, rhs, off, s, pre, cfg, out, stats);
        else
            cg_batch<32>(M, rhs, off, s, pre, cfg, out, stats);
        off += std::size_t(s);
    }
    return out;
}

std::vector<double> dense_solve(const Csr& M, const std::vector<double>& b,
                                SolveStats* stats) {
    const auto t0 = std::chrono::steady_clock::now();
    check_square(M, b);
    if (M.nrows > 12000)
        throw config_error("dense solve is limited to 12000 unknowns; use the "
                           "iterative solver");
    const int n = M.nrows;
    DenseMatrix A(n);
    for (int i = 0; i < n; ++i)
        for (std::int64_t p = M.ptr[i]; p < M.ptr[i + 1]; ++p)
            A.at(i, M.col[std::size_t(p)]) = M.val[std::size_t(p)];
    std::vector<double> x = cholesky_solve(A, b);
    if (stats) {
        std::vector<double> res(static_cast<std::size_t>(n), 0.0);
        M.matvec(x.data(), res.data());
        double bn = 0.0, rn = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = b[std::size_t(i)] - res[std::size_t(i)];
            rn += d * d;
            bn += b[std::size_t(i)] * b[std::size_t(i)];
        }
        stats->iters = 0;
        stats->rel_residual = bn > 0.0 ? std::sqrt(rn / bn) : std::sqrt(rn);
        stats->converged = true;
        stats->nnz = M.nnz();
        stats->seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        stats->method = "dense-cholesky";
    }
    return x;
}

} // namespace wavesrc
