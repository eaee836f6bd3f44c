#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wavesrc/sparse.hpp"

namespace wavesrc {

// none and jacobi are the baseline choices; ic0 (no-fill incomplete Cholesky)
// and ict (threshold-fill incomplete Cholesky) are stronger options for the
// full-scale normal systems. Both factor a symmetrically equilibrated copy and
// retry with a growing diagonal shift if the factorization breaks down.
enum class Preconditioner { none, jacobi, ic0, ict };

struct CgConfig {
    double tol_rel = 1e-8;
    std::int64_t max_iters = 0; // 0 picks 20*ceil(sqrt(n))
    Preconditioner precond = Preconditioner::jacobi;
    double ict_drop = 1e-3; // drop tolerance on factor entries (ict only)
    int ict_max_fill = 32;  // off-diagonal entries kept per column (ict only)
    bool check_symmetry = true;
    // Called every progress_every iterations with (iteration, relative residual).
    std::int64_t progress_every = 0;
    std::function<void(std::int64_t, double)> progress;
};

struct SolveStats {
    std::int64_t iters = 0;
    double rel_residual = 0.0; // recomputed ||b - M x|| / ||b|| after the solve
    bool converged = false;
    double seconds = 0.0;
    std::int64_t nnz = 0; // matrix entries
    std::string method;
};

// Preconditioned conjugate gradient for symmetric positive definite systems.
// Probes symmetry with deterministic random vectors, refuses indefinite or
// non-symmetric input, and recomputes the final residual from scratch.
std::vector<double> cg_solve(const Csr& M, const std::vector<double>& b,
                             const CgConfig& cfg = {}, SolveStats* stats = nullptr);

// Same solve started from an initial guess. Convergence is still measured
// against ||b||, so the result meets the same tolerance as a cold start; an
// empty guess means zero.
std::vector<double> cg_solve(const Csr& M, const std::vector<double>& b,
                             const std::vector<double>& x0, const CgConfig& cfg,
                             SolveStats* stats = nullptr);

// Lockstep solve of several systems that share the matrix. Each column runs
// the standard conjugate gradient recurrence with its own scalars and freezes
// at its own stopping point, so every solution is bitwise identical to a
// cg_solve call on that right-hand side alone; the benefit is that the matrix
// and factor are streamed once per iteration for the whole batch. Progress
// reports the worst relative residual among the still-active columns.
std::vector<std::vector<double>> cg_solve_multi(const Csr& M,
                                                const std::vector<std::vector<double>>& rhs,
                                                const CgConfig& cfg = {},
                                                std::vector<SolveStats>* stats = nullptr);

// Dense Cholesky solve of the same system, for small cross-checks.
std::vector<double> dense_solve(const Csr& M, const std::vector<double>& b,
                                SolveStats* stats = nullptr);

} // namespace wavesrc
