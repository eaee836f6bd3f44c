#include "wavesrc/dense.hpp"

#include <cmath>
#include <string>

#include "wavesrc/errors.hpp"

namespace wavesrc {

double cholesky_factor(DenseMatrix& m) {
    const int n = m.n;
    double dmin = 0.0, dmax = 0.0;
    for (int j = 0; j < n; ++j) {
        double d = m.at(j, j);
        for (int k = 0; k < j; ++k) d -= m.at(j, k) * m.at(j, k);
        if (!(d > 0.0) || !std::isfinite(d))
            throw numeric_error("cholesky: non-positive pivot " + std::to_string(d) +
                                " at index " + std::to_string(j));
        const double ljj = std::sqrt(d);
        m.at(j, j) = ljj;
        if (j == 0) { dmin = dmax = d; }
        else { dmin = std::min(dmin, d); dmax = std::max(dmax, d); }
        for (int i = j + 1; i < n; ++i) {
            double s = m.at(i, j);
            for (int k = 0; k < j; ++k) s -= m.at(i, k) * m.at(j, k);
            m.at(i, j) = s / ljj;
        }
    }
    return dmax / dmin;
}

void cholesky_apply(const DenseMatrix& l, std::vector<double>& x) {
    const int n = l.n;
    for (int i = 0; i < n; ++i) {
        double s = x[i];
        for (int k = 0; k < i; ++k) s -= l.at(i, k) * x[k];
        x[i] = s / l.at(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int k = i + 1; k < n; ++k) s -= l.at(k, i) * x[k];
        x[i] = s / l.at(i, i);
    }
}

std::vector<double> cholesky_solve(DenseMatrix m, std::vector<double> rhs) {
    if (int(rhs.size()) != m.n)
        throw numeric_error("cholesky_solve: rhs length mismatch");
    cholesky_factor(m);
    cholesky_apply(m, rhs);
    return rhs;
}

} // namespace wavesrc
