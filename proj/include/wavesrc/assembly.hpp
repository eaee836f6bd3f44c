#pragma once
#include <cstdint>
#include <functional>
#include <vector>

#include "wavesrc/excitation.hpp"
#include "wavesrc/field.hpp"
#include "wavesrc/grid.hpp"
#include "wavesrc/sparse.hpp"

namespace wavesrc {

// Auxiliary function h~(x,t) = h(x,0) exp(t q(x)), q = h_t(x,0)/h(x,0), with all
// derivative evaluators closed-form. Satisfies h~(x,0) = h(x,0), h~_t(x,0) =
// h_t(x,0), h~ != 0.
class AuxiliaryHTilde {
public:
    explicit AuxiliaryHTilde(const Excitation& h) : h_(&h) {}

    double value(double x, double y, double t) const;
    double inv_t(double x, double y, double t) const;   // (1/h~)_t
    double inv_tt(double x, double y, double t) const;  // (1/h~)_tt
    std::array<double, 2> grad_inv(double x, double y, double t) const;
    double lap_inv(double x, double y, double t) const;
    double normal_deriv(double x, double y, double t, double nu_x, double nu_y) const;

    // Logarithmic derivatives used by the operator stencils.
    double r(double x, double y) const { return h_->q(x, y); } // h~_t/h~
    std::array<double, 2> g(double x, double y, double t) const; // grad h~ / h~
    double div_g(double x, double y, double t) const;
    double htt_over(double x, double y) const; // h~_tt/h~ = q^2
    double lap_over(double x, double y, double t) const; // lap h~ / h~

    const Excitation& excitation() const { return *h_; }

private:
    const Excitation* h_;
};

// Validates |h(x,0)| > 0 on every node (error names the node) and checks the h~
// matching conditions on the grid to roundoff.
AuxiliaryHTilde build_h_tilde(const Excitation& h, const SpaceTimeGrid& grid);

struct BoundaryData {
    TraceArray zeta, xi;
};

// zeta = F_tt/h~, xi = (G_tt h~ - d_nu h~ F_tt)/h~^2, evaluated at the boundary
// nodes of the grid over all time levels.
BoundaryData compute_boundary_data(const TraceArray& F_tt, const TraceArray& G_tt,
                                   const AuxiliaryHTilde& ht, const SpaceTimeGrid& grid);

enum class OperatorMode { paper_simplified, full };

// Coefficient hooks for the transformed operator; only full mode accepts
// non-default values. a and B default to zero when the functions are empty.
struct Coefficients {
    double c = 1.0;
    std::function<double(double, double)> a;
    std::function<double(double, double)> b_x, b_y;

    bool is_default() const { return c == 1.0 && !a && !b_x && !b_y; }
};

struct OperatorBlock {
    Csr L;                      // rows at interior nodes, 2<=m,n<=N-1, 2<=j<=n_t-1
    std::vector<double> rhs;    // source term values (zero for zero initial data)
};

OperatorBlock assemble_wave_operator(const SpaceTimeGrid& grid, const AuxiliaryHTilde& ht,
                                     OperatorMode mode, const Coefficients& coeffs = {},
                                     bool scale_pde_rows_dt2 = false);

struct ConstraintBlocks {
    Csr Dt, D, N;
    std::vector<double> rhs_dt, rhs_d, rhs_n;
};

// Dt: (w(.,t_2)-w(.,t_1))/dt = Psi at every spatial node; D: identity at boundary
// nodes, all time levels, rhs zeta; N: one-sided outward normal difference
// (+1/dx boundary node, -1/dx inward neighbor), rhs xi.
ConstraintBlocks assemble_constraints(const SpaceTimeGrid& grid, const BoundaryData& data,
                                      const Field2D& psi);

struct Penalties {
    Csr Dx, Dy, Dt;
};

// First-order forward differences along each axis; rows exist only where the
// forward neighbor does.
Penalties assemble_penalties(const SpaceTimeGrid& grid);

struct StackedSystem {
    Csr C;
    std::vector<double> b;
    // row-block sizes, in stacking order Dt, D, N, L
    std::int64_t rows_dt = 0, rows_d = 0, rows_n = 0, rows_l = 0;
};

StackedSystem stack_system(const ConstraintBlocks& cons, const OperatorBlock& op);

struct NormalSystem {
    Csr M;
    std::vector<double> rhs;
    double eps1 = 0.0, eps2 = 0.0;
};

// M = C^T C + eps1 I + eps2 (Dx^T Dx + Dy^T Dy + Dt^T Dt), rhs = C^T b. The
// verbatim flag keeps the stacked right-hand side b as-is, which is only
// well-formed when C is square.
NormalSystem assemble_normal_system(const StackedSystem& sys, const Penalties& pen,
                                    double eps1, double eps2, bool verbatim_rhs = false);

} // namespace wavesrc
