#pragma once
#include <array>
#include <cstdint>
#include <vector>

#include "wavesrc/errors.hpp"

namespace wavesrc {

// Square uniform grid over [x_min,x_max] x [y_min,y_max] with n nodes per axis.
// Node indices are 1-based at the API level: node(m,n) = (x_min+(m-1)dx, y_min+(n-1)dx).
struct SpatialGrid2D {
    double x_min = -0.5, x_max = 0.5;
    double y_min = -0.5, y_max = 0.5;
    int n = 0;
    double dx = 0.0;

    static SpatialGrid2D square(double lo, double hi, int n_nodes);

    double x(int m) const { return x_min + (m - 1) * dx; }
    double y(int nn) const { return y_min + (nn - 1) * dx; }
    bool is_boundary(int m, int nn) const { return m == 1 || m == n || nn == 1 || nn == n; }
};

enum class DtConvention { t_over_nt, t_over_nt_minus_1 };

// Uniform time levels t_j = (j-1)dt, j = 1..n_t. Default dt = T/n_t, so the last
// recorded level sits at T-dt; the alternative dt = T/(n_t-1) reaches T exactly.
struct TimeGrid {
    double t_final = 1.0;
    int n_t = 0;
    double dt = 0.0;

    static TimeGrid make(double t_final, int n_t,
                         DtConvention conv = DtConvention::t_over_nt);

    double t(int j) const { return (j - 1) * dt; }
};

struct SpaceTimeGrid {
    SpatialGrid2D space;
    TimeGrid time;

    std::int64_t unknowns() const {
        return std::int64_t(space.n) * space.n * time.n_t;
    }
};

// The canonical linearization i = (m-1)*N*n_t + (n-1)*n_t + j, all 1-based.
std::int64_t linearize(int m, int n, int j, const SpaceTimeGrid& grid);
std::array<int, 3> delinearize(std::int64_t i, const SpaceTimeGrid& grid);

// 0-based flat index used for internal storage; equals linearize(...)-1.
inline std::int64_t flat_index(int m0, int n0, int j0, int n, int n_t) {
    return (std::int64_t(m0) * n + n0) * n_t + j0;
}

// Boundary node with outward unit normal. Corners belong to the west/east edges
// and carry the x-axis normal.
struct BoundaryNode {
    int m, n;          // 1-based grid indices
    double nu_x, nu_y; // outward normal
};

// Deterministic enumeration: west (m=1, n=1..N), east (m=N, n=1..N),
// south (n=1, m=2..N-1), north (n=N, m=2..N-1). Size 4N-4.
std::vector<BoundaryNode> boundary_nodes(int n);
std::vector<BoundaryNode> boundary_nodes(const SpatialGrid2D& grid);

} // namespace wavesrc
