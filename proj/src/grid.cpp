#include "wavesrc/grid.hpp"

#include <stdexcept>
#include <string>

namespace wavesrc {

SpatialGrid2D SpatialGrid2D::square(double lo, double hi, int n_nodes) {
    if (n_nodes < 2)
        throw config_error("spatial grid needs at least 2 nodes per axis, got " +
                           std::to_string(n_nodes));
    if (!(hi > lo))
        throw config_error("spatial grid extent is empty: [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
    SpatialGrid2D g;
    g.x_min = g.y_min = lo;
    g.x_max = g.y_max = hi;
    g.n = n_nodes;
    g.dx = (hi - lo) / (n_nodes - 1);
    return g;
}

TimeGrid TimeGrid::make(double t_final, int n_t, DtConvention conv) {
    if (n_t < 3)
        throw config_error("time grid needs at least 3 levels, got " + std::to_string(n_t));
    if (!(t_final > 0.0))
        throw config_error("t_final must be positive, got " + std::to_string(t_final));
    TimeGrid g;
    g.t_final = t_final;
    g.n_t = n_t;
    g.dt = (conv == DtConvention::t_over_nt) ? t_final / n_t : t_final / (n_t - 1);
    return g;
}

std::int64_t linearize(int m, int n, int j, const SpaceTimeGrid& grid) {
    const int N = grid.space.n, n_t = grid.time.n_t;
    if (m < 1 || m > N || n < 1 || n > N || j < 1 || j > n_t)
        throw std::out_of_range("linearize: index (" + std::to_string(m) + "," +
                                std::to_string(n) + "," + std::to_string(j) +
                                ") outside grid " + std::to_string(N) + "^2 x " +
                                std::to_string(n_t));
    return std::int64_t(m - 1) * N * n_t + std::int64_t(n - 1) * n_t + j;
}

std::array<int, 3> delinearize(std::int64_t i, const SpaceTimeGrid& grid) {
    const int N = grid.space.n, n_t = grid.time.n_t;
    if (i < 1 || i > grid.unknowns())
        throw std::out_of_range("delinearize: index " + std::to_string(i) +
                                " outside 1.." + std::to_string(grid.unknowns()));
    const std::int64_t z = i - 1;
    const int j = int(z % n_t);
    const std::int64_t mn = z / n_t;
    return {int(mn / N) + 1, int(mn % N) + 1, j + 1};
}

std::vector<BoundaryNode> boundary_nodes(int n) {
    std::vector<BoundaryNode> out;
    out.reserve(4 * n - 4);
    for (int k = 1; k <= n; ++k) out.push_back({1, k, -1.0, 0.0});
    for (int k = 1; k <= n; ++k) out.push_back({n, k, 1.0, 0.0});
    for (int m = 2; m <= n - 1; ++m) out.push_back({m, 1, 0.0, -1.0});
    for (int m = 2; m <= n - 1; ++m) out.push_back({m, n, 0.0, 1.0});
    return out;
}

std::vector<BoundaryNode> boundary_nodes(const SpatialGrid2D& grid) {
    return boundary_nodes(grid.n);
}

} // namespace wavesrc
