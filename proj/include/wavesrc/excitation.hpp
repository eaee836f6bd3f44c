#pragma once
#include <array>

namespace wavesrc {

// Closed-form excitation h(x,t) with analytic time derivatives, plus the spatial
// derivatives of h(x,0) and q(x) = h_t(x,0)/h(x,0) needed to build the auxiliary
// function h~(x,t) = h(x,0) exp(t q(x)) and its derivatives analytically.
class Excitation {
public:
    virtual ~Excitation() = default;

    virtual double h(double x, double y, double t) const = 0;
    virtual double h_t(double x, double y, double t) const = 0;
    virtual double h_tt(double x, double y, double t) const = 0;

    double h0(double x, double y) const { return h(x, y, 0.0); }

    virtual double q(double x, double y) const = 0;
    virtual std::array<double, 2> grad_h0(double x, double y) const = 0;
    virtual double lap_h0(double x, double y) const = 0;
    virtual std::array<double, 2> grad_q(double x, double y) const = 0;
    virtual double lap_q(double x, double y) const = 0;
};

// h(x,t) = 1 + exp(-(4+|x|^2) t): the decaying excitation of the reference test
// configuration. h(x,0) = 2, q(x) = -(4+|x|^2)/2, h~ = 2 exp(-t(4+|x|^2)/2).
class DecayingExcitation final : public Excitation {
public:
    double h(double x, double y, double t) const override;
    double h_t(double x, double y, double t) const override;
    double h_tt(double x, double y, double t) const override;
    double q(double x, double y) const override;
    std::array<double, 2> grad_h0(double, double) const override { return {0.0, 0.0}; }
    double lap_h0(double, double) const override { return 0.0; }
    std::array<double, 2> grad_q(double x, double y) const override { return {-x, -y}; }
    double lap_q(double, double) const override { return -2.0; }
};

// Constant-in-time excitation, mostly for tests (h~ = h0, no memory term).
class ConstantExcitation final : public Excitation {
public:
    explicit ConstantExcitation(double value = 1.0) : value_(value) {}
    double h(double, double, double) const override { return value_; }
    double h_t(double, double, double) const override { return 0.0; }
    double h_tt(double, double, double) const override { return 0.0; }
    double q(double, double) const override { return 0.0; }
    std::array<double, 2> grad_h0(double, double) const override { return {0.0, 0.0}; }
    double lap_h0(double, double) const override { return 0.0; }
    std::array<double, 2> grad_q(double, double) const override { return {0.0, 0.0}; }
    double lap_q(double, double) const override { return 0.0; }

private:
    double value_;
};

} // namespace wavesrc
