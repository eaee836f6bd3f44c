#include "wavesrc/source.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "wavesrc/errors.hpp"

namespace wavesrc {
namespace {

double two_inclusions(double x, double y) {
    double out = 0.0;
    const double ex = x - 0.15;
    if (4.0 * ex * ex + y * y / 8.0 <= 0.01) out = 1.0;
    if (std::max(std::fabs(x + 0.15), std::fabs(y)) < 0.1) out = -1.0;
    return out;
}

double three_inclusions(double x, double y) {
    double out = 0.0;
    const double cx = x - 0.25;
    if (cx * cx + y * y < 0.12 * 0.12) out = 1.5;
    const double ey = y + 0.25;
    if (4.0 * x * x + ey * ey < 0.15 * 0.15) out = 1.0;
    if (std::fabs(x + 0.25) + std::fabs(y) < 0.17) out = -1.0;
    return out;
}

double peaks_fn(double X, double Y) {
    return 3.0 * (1.0 - X) * (1.0 - X) * std::exp(-X * X - (Y + 1.0) * (Y + 1.0)) -
           10.0 * (X / 5.0 - X * X * X - std::pow(Y, 5)) * std::exp(-X * X - Y * Y) -
           (1.0 / 3.0) * std::exp(-(X + 1.0) * (X + 1.0) - Y * Y);
}

// Letter rasters, row 0 at the top of the glyph. A has amplitude -1, L has +1.
constexpr int glyph_rows = 9, glyph_cols = 7;
const char* const glyph_a[glyph_rows] = {
    "..###..",
    ".#...#.",
    "#.....#",
    "#.....#",
    "#######",
    "#.....#",
    "#.....#",
    "#.....#",
    "#.....#",
};
const char* const glyph_l[glyph_rows] = {
    "#......",
    "#......",
    "#......",
    "#......",
    "#......",
    "#......",
    "#......",
    "#......",
    "#######",
};

double glyph_lookup(const char* const* glyph, double x, double y, double cx, double cy,
                    double w, double h) {
    const double fx = (x - (cx - 0.5 * w)) / w;
    const double fy = ((cy + 0.5 * h) - y) / h;
    if (fx < 0.0 || fx >= 1.0 || fy < 0.0 || fy >= 1.0) return 0.0;
    const int i = std::min(glyph_cols - 1, int(fx * glyph_cols));
    const int j = std::min(glyph_rows - 1, int(fy * glyph_rows));
    return glyph[j][i] == '#' ? 1.0 : 0.0;
}

double letters(double x, double y) {
    // A on the left half, L on the right; boxes 0.24 x 0.36 inside Omega.
    const double a = glyph_lookup(glyph_a, x, y, -0.2, 0.0, 0.24, 0.36);
    if (a > 0.0) return -1.0;
    const double l = glyph_lookup(glyph_l, x, y, 0.2, 0.0, 0.24, 0.36);
    return l > 0.0 ? 1.0 : 0.0;
}

} // namespace

double SourceSpec::evaluate(double x, double y) const {
    double base = 0.0;
    switch (kind) {
        case SourceKind::two_inclusions: base = two_inclusions(x, y); break;
        case SourceKind::three_inclusions: base = three_inclusions(x, y); break;
        case SourceKind::peaks: base = peaks_fn(coordinate_scale * x, coordinate_scale * y); break;
        case SourceKind::letters_AL: base = letters(x, y); break;
        case SourceKind::custom_grid: {
            if (grid_n < 2 || int(grid_values.size()) != grid_n * grid_n)
                throw config_error("custom_grid source: need n>=2 and n*n values, got n=" +
                                   std::to_string(grid_n) + ", " +
                                   std::to_string(grid_values.size()) + " values");
            if (x < -0.5 || x > 0.5 || y < -0.5 || y > 0.5) return 0.0;
            const double d = 1.0 / (grid_n - 1);
            double si = (x + 0.5) / d, sj = (y + 0.5) / d;
            int i = std::min(grid_n - 2, std::max(0, int(std::floor(si))));
            int j = std::min(grid_n - 2, std::max(0, int(std::floor(sj))));
            const double fi = si - i, fj = sj - j;
            const auto g = [&](int a, int b) { return grid_values[std::size_t(a) * grid_n + b]; };
            base = (1 - fi) * (1 - fj) * g(i, j) + fi * (1 - fj) * g(i + 1, j) +
                   (1 - fi) * fj * g(i, j + 1) + fi * fj * g(i + 1, j + 1);
            break;
        }
    }
    return amplitude_scale * base;
}

SourceSpec SourceSpec::for_test(int test_id) {
    SourceSpec s;
    switch (test_id) {
        case 1: s.kind = SourceKind::two_inclusions; break;
        case 2: s.kind = SourceKind::three_inclusions; break;
        case 3: s.kind = SourceKind::peaks; break;
        case 4: s.kind = SourceKind::letters_AL; break;
        default:
            throw config_error("unknown test id " + std::to_string(test_id) + " (expected 1..4)");
    }
    return s;
}

} // namespace wavesrc
