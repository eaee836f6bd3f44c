#pragma once
#include <string>
#include <vector>

#include "wavesrc/assembly.hpp"
#include "wavesrc/field.hpp"
#include "wavesrc/grid.hpp"

namespace wavesrc {

// Source recovery from the solved space-time field: p = c w(x,0) - lap_f/h(x,0).
// lap_f is the Laplacian of the initial displacement; pass nullptr when the
// initial data vanish.
Field2D extract_source(const std::vector<double>& w, const SpaceTimeGrid& grid,
                       const Excitation& h, double c = 1.0,
                       const Field2D* lap_f = nullptr);

struct SourceMetrics {
    double err_min = 0.0;  // deviation of the reconstructed minimum
    double err_max = 0.0;  // deviation of the reconstructed maximum
    double l2 = 0.0;       // l2 deviation over all nodes
    bool absolute = false; // true when the exact source vanishes identically
    double rec_min = 0.0, rec_max = 0.0;
    double true_min = 0.0, true_max = 0.0;
};

// Extreme-value deviations are relative to the exact extreme when it is
// nonzero, absolute otherwise; l2 is relative to ||p_exact|| unless the exact
// source vanishes identically, where it degrades to a root-mean-square.
SourceMetrics compute_metrics(const Field2D& p_rec, const Field2D& p_exact);

struct ProfilePoint {
    double x = 0.0;
    double value = 0.0;
};

// Values along the grid row nearest to y = y_line.
std::vector<ProfilePoint> line_profile(const Field2D& p, const SpatialGrid2D& grid,
                                       double y_line);

// 8-bit ASCII PGM with values mapped linearly from [lo,hi] to 0..255 (clamped).
// Rows run from y_max down to y_min so the image reads like the plane.
void write_pgm(const Field2D& p, const std::string& path, double lo, double hi);

} // namespace wavesrc
