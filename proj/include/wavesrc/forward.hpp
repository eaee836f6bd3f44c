#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>

#include "wavesrc/excitation.hpp"
#include "wavesrc/field.hpp"
#include "wavesrc/grid.hpp"
#include "wavesrc/source.hpp"

namespace wavesrc {

enum class TimeStart { taylor, paper_zero };

struct ForwardConfig {
    // Internal stepping runs at dt/stride and every stride-th level is recorded,
    // so refinement studies can keep CFL margin at fixed recording resolution.
    int stride = 1;
    // taylor: second level u(dt) = dt^2/2 p(x) h(x,0) (second-order start);
    // paper_zero: u(dt) = 0 (first-order start).
    TimeStart start = TimeStart::taylor;
    double cfl_warn_ratio = 0.95;
    bool quiet = false;
};

// One leapfrog level: next = 2 cur - prev + dt^2 (lap5(cur) + src), with the frame
// of the grid held at zero. Exposed for reversibility tests.
void leapfrog_step(Field2D& next, const Field2D& cur, const Field2D& prev,
                   const Field2D& src, double dt, double dx);

// Explicit solve of u_tt = lap u + p(x) h(x,t) on the fine grid with zero initial
// data and zero Dirichlet frame; returns u at the recorded time levels.
Field3D forward_solve(const SourceSpec& p, const Excitation& h, const SpaceTimeGrid& fine,
                      const ForwardConfig& cfg = {});

struct CauchyRecord {
    TraceArray F, G;      // boundary node x time
    int n = 0, n_t = 0;   // inverse grid shape
    double half_width = 0.5, t_final = 1.0;
    double delta = 0.0;
    std::uint64_t seed = 0;
};

// Samples F = u and G = d_nu u at the inverse-grid boundary nodes: bilinear
// interpolation for F; second-order one-sided difference along the outward normal
// at the fine spacing for G.
CauchyRecord extract_cauchy(const Field3D& u, const SpaceTimeGrid& fine,
                            const SpaceTimeGrid& inverse);

// Multiplicative noise F -> F (1 + delta xi), xi uniform on [-1,1], independent
// counter-based draws for F and G derived from the seed. delta = 0 is exact identity.
CauchyRecord add_noise(const CauchyRecord& rec, double delta, std::uint64_t seed);

void write_cauchy_csv(const CauchyRecord& rec, std::ostream& os);
CauchyRecord read_cauchy_csv(std::istream& is);
void write_cauchy_csv(const CauchyRecord& rec, const std::string& path);
CauchyRecord read_cauchy_csv(const std::string& path);

} // namespace wavesrc
