#pragma once
#include <vector>

namespace wavesrc {

enum class SourceKind { two_inclusions, three_inclusions, peaks, letters_AL, custom_grid };

// True source p(x). Amplitudes follow the displayed test formulas; amplitude_scale
// multiplies them. The peaks kind maps Omega onto the function's native (-3,3)
// coordinates via coordinate_scale (default 6), which reproduces the reference
// extrema -6.55/8.10.
struct SourceSpec {
    SourceKind kind = SourceKind::two_inclusions;
    double amplitude_scale = 1.0;
    double coordinate_scale = 6.0;

    // custom_grid: n x n node values over Omega = (-0.5,0.5)^2, row-major with the
    // x index major, evaluated bilinearly and zero outside Omega.
    int grid_n = 0;
    std::vector<double> grid_values;

    double evaluate(double x, double y) const;

    static SourceSpec for_test(int test_id); // 1..4
};

} // namespace wavesrc
