#include "wavesrc/time_derivative.hpp"

#include <cmath>
#include <string>

#include "wavesrc/errors.hpp"

namespace wavesrc {

IntegrationMatrix build_integration_matrix(int n_t) {
    if (n_t < 1) throw config_error("integration matrix: n_t must be >= 1, got " +
                                    std::to_string(n_t));
    IntegrationMatrix m;
    m.n_t = n_t;
    m.A = DenseMatrix(n_t);
    for (int n = 0; n < n_t; ++n)
        for (int j = 0; j <= n; ++j) m.A.at(n, j) = double(n - j + 1);
    return m;
}

namespace {

void validate(double dt, const DiffConfig& cfg) {
    if (!(cfg.epsilon > 0.0))
        throw config_error("tikhonov differentiation: epsilon must be > 0, got " +
                           std::to_string(cfg.epsilon));
    if (!(dt > 0.0))
        throw config_error("tikhonov differentiation: dt must be > 0");
}

// Builds the factored normal matrix and the scale factors for rhs and solution.
struct Plan {
    DenseMatrix L;      // cholesky factor of the normal matrix
    DenseMatrix At;     // A^T (identity-applied when verbatim)
    double rhs_scale;   // multiplies A^T f (or f in verbatim mode)
    double sol_scale;   // multiplies the solved vector
    bool verbatim;
};

Plan make_plan(int n_t, double dt, const DiffConfig& cfg) {
    const IntegrationMatrix im = build_integration_matrix(n_t);
    Plan plan;
    plan.verbatim = cfg.verbatim_rhs;
    // normal matrix: scale * A^T A + eps I
    double gram_scale = 1.0;
    if (!cfg.verbatim_rhs && cfg.scaling == EpsScaling::derivative) {
        gram_scale = dt * dt * dt * dt;
        plan.rhs_scale = dt * dt;
        plan.sol_scale = 1.0;
    } else {
        plan.rhs_scale = 1.0;
        plan.sol_scale = cfg.verbatim_rhs ? 1.0 : 1.0 / (dt * dt);
    }
    DenseMatrix M(n_t);
    for (int i = 0; i < n_t; ++i)
        for (int j = 0; j < n_t; ++j) {
            double s = 0.0;
            for (int k = std::max(i, j); k < n_t; ++k) s += im.A.at(k, i) * im.A.at(k, j);
            M.at(i, j) = gram_scale * s;
        }
    for (int i = 0; i < n_t; ++i) M.at(i, i) += cfg.epsilon;

    plan.L = std::move(M);
    double cond;
    try {
        cond = cholesky_factor(plan.L);
    } catch (const numeric_error& e) {
        throw numeric_error(std::string("tikhonov differentiation: factorization breakdown (") +
                            e.what() + ")");
    }
    if (!std::isfinite(cond) || cond > 1e18)
        throw numeric_error("tikhonov differentiation: normal matrix numerically singular, "
                            "condition estimate " + std::to_string(cond));
    plan.At = DenseMatrix(n_t);
    for (int i = 0; i < n_t; ++i)
        for (int j = 0; j <= i; ++j) plan.At.at(j, i) = im.A.at(i, j);
    return plan;
}

void apply_plan(const Plan& plan, const double* trace, double* out) {
    const int n_t = plan.L.n;
    std::vector<double> rhs(n_t, 0.0);
    if (plan.verbatim) {
        for (int i = 0; i < n_t; ++i) rhs[i] = trace[i];
    } else {
        for (int i = 0; i < n_t; ++i) {
            double s = 0.0;
            for (int j = 0; j < n_t; ++j) s += plan.At.at(i, j) * trace[j];
            rhs[i] = plan.rhs_scale * s;
        }
    }
    cholesky_apply(plan.L, rhs);
    for (int i = 0; i < n_t; ++i) out[i] = plan.sol_scale * rhs[i];
}

} // namespace

std::vector<double> second_time_derivative(const std::vector<double>& trace, double dt,
                                           const DiffConfig& cfg) {
    validate(dt, cfg);
    if (trace.empty()) throw config_error("tikhonov differentiation: empty trace");
    const Plan plan = make_plan(int(trace.size()), dt, cfg);
    std::vector<double> out(trace.size());
    apply_plan(plan, trace.data(), out.data());
    return out;
}

TraceArray differentiate_traces(const TraceArray& traces, double dt, const DiffConfig& cfg) {
    validate(dt, cfg);
    if (traces.n_t < 1) throw config_error("tikhonov differentiation: empty trace array");
    const Plan plan = make_plan(traces.n_t, dt, cfg);
    TraceArray out(traces.n_nodes, traces.n_t);
    for (int k = 0; k < traces.n_nodes; ++k)
        apply_plan(plan, &traces.v[std::size_t(k) * traces.n_t],
                   &out.v[std::size_t(k) * traces.n_t]);
    return out;
}

} // namespace wavesrc
