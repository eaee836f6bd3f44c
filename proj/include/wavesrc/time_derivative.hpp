#pragma once
#include <vector>

#include "wavesrc/dense.hpp"
#include "wavesrc/field.hpp"

namespace wavesrc {

// Double time integration with zero initial value and slope: f(t_n) =
// dt^2 sum_{i<=n} sum_{j<=i} y(t_j) = dt^2 (A y)(n), A[n][j] = n-j+1 (lower
// triangular, unit diagonal). Inverting A twice-differences the trace.
struct IntegrationMatrix {
    int n_t = 0;
    DenseMatrix A;
};

IntegrationMatrix build_integration_matrix(int n_t);

// trace: eps penalizes the trace-scale residual, solve (A^T A + eps I) z = A^T f
//        and return y = z/dt^2 (equivalent to derivative scaling with eps*dt^4);
// derivative: eps penalizes y directly, solve (dt^4 A^T A + eps I) y = dt^2 A^T f.
enum class EpsScaling { trace, derivative };

struct DiffConfig {
    double epsilon = 1e-5;
    EpsScaling scaling = EpsScaling::trace;
    // Reproduces the printed normal system (A^T A + eps I) y = f: no transpose on
    // the right-hand side and no dt^2 scaling. For comparison only.
    bool verbatim_rhs = false;
};

std::vector<double> second_time_derivative(const std::vector<double>& trace, double dt,
                                           const DiffConfig& cfg = {});

// Same regularized inversion applied independently to each row of a trace array.
TraceArray differentiate_traces(const TraceArray& traces, double dt,
                                const DiffConfig& cfg = {});

} // namespace wavesrc
