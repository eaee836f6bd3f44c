#include "wavesrc/excitation.hpp"

#include <cmath>

namespace wavesrc {

double DecayingExcitation::h(double x, double y, double t) const {
    return 1.0 + std::exp(-(4.0 + x * x + y * y) * t);
}

double DecayingExcitation::h_t(double x, double y, double t) const {
    const double s = 4.0 + x * x + y * y;
    return -s * std::exp(-s * t);
}

double DecayingExcitation::h_tt(double x, double y, double t) const {
    const double s = 4.0 + x * x + y * y;
    return s * s * std::exp(-s * t);
}

double DecayingExcitation::q(double x, double y) const {
    return -0.5 * (4.0 + x * x + y * y);
}

} // namespace wavesrc
