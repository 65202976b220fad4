#pragma once

#include "refract/classical.hpp"
#include "refract/lundberg.hpp"
#include "refract/model.hpp"

#include <span>
#include <vector>

namespace refract {

/// phi(u) = E[r^{N_tau} e^{-delta tau}; tau < inf | U_b(0) = u] for the refracted model,
/// split into phi1 on [0, b] and phi2 on (b, u_max], all on one amount grid with b as a node.
class RefractedTransform {
public:
    RefractedTransform(const RiskModel& m, TransformParams p, double h_x, double u_max);

    const RiskModel& model() const { return model_; }
    const TransformParams& params() const { return params_; }
    const ClassicalTransform& classical() const { return classical_; }
    double rho1() const { return classical_.rho1(); }
    double rho2() const { return rho2_; }
    double step() const { return h_; }
    double u_max() const { return u_max_; }

    /// nu(b) - (lambda r / c2) (nu * T_{rho2} f)(b).
    double chi() const { return chi_; }
    double k() const { return k_; }

    double phi1(double u) const;
    /// Right limit at b for u == b.
    double phi2(double u) const;
    double phi(double u) const { return u <= model_.b ? phi1(u) : phi2(u); }
    double h_fn(double y) const;

    std::span<const double> phi1_grid() const { return phi1_; }
    std::span<const double> phi2_grid() const { return phi2_; }

    /// |phi1(b) - phi2(b+)|.
    double boundary_gap() const;
    /// c2 phi2(b) - lambda r [int_0^b phi1(y) T_{rho2} f(b - y) dy + T_{rho2} Fbar(b)].
    double boundary_identity_residual() const;
    /// Largest residual of the integro-differential equation on grid nodes in [lo, hi];
    /// side 1 uses premium c1, side 2 premium c2.
    double max_ide_residual(int side, double lo, double hi) const;

private:
    RiskModel model_;
    TransformParams params_;
    double h_;
    double u_max_;
    ClassicalTransform classical_;
    double rho2_;
    double chi_ = 1.0;
    double k_ = 0.0;
    std::vector<double> tf2_;     // T_{rho2} f on [0, u_max]
    std::vector<double> tf2bar_;  // T_{rho2} Fbar on [0, u_max]
    std::vector<double> phi1_;    // nodes 0..J
    std::vector<double> h_vals_;  // h(y) on y-nodes
    std::vector<double> phi2_;    // y-nodes, phi2(b + y)

    std::size_t b_index() const;
    double combined(std::size_t i) const;
};

/// Amount step no larger than h_x that puts b on the grid.
double aligned_amount_step(double b, double h_x);

}  // namespace refract
