#pragma once

#include "refract/claims.hpp"
#include "refract/hybrid.hpp"
#include "refract/lundberg.hpp"
#include "refract/model.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace refract {

/// Uniform time grid t_k = k * step, k = 0..count-1, with t_max = step * (count - 1).
struct TimeGrid {
    double step;
    double t_max;

    std::size_t count() const;
};

/// Claim-count truncation and grids shared by the time-domain kernels.
/// Everything here is reproducible from (model, grid, n_max).
class KernelCache {
public:
    /// `amount_max` bounds the capital levels the kernels will be queried at.
    KernelCache(RiskModel model, TimeGrid grid, int n_max, double amount_max, double h_x = 1e-2);
    KernelCache(const KernelCache&) = delete;
    KernelCache& operator=(const KernelCache&) = delete;

    const RiskModel& model() const { return model_; }
    const TimeGrid& grid() const { return grid_; }
    int n_max() const { return n_max_; }
    const ConvolutionPowers& powers() const { return powers_; }
    double drift(int i) const { return i == 1 ? model_.c1 : model_.c2; }

private:
    RiskModel model_;
    TimeGrid grid_;
    int n_max_;
    ConvolutionPowers powers_;
};

/// t^{n-1} e^{-lambda t} lambda^n / n!, valid for negative t.
double poisson_weight(double lambda, int n, double t);

/// g_i(x, n, t) for n >= 1: x t^{n-1} e^{-lambda t} lambda^n f^{n*}(c_i t - x) / n!.
double g_value(const KernelCache& k, int drift, double x, int n, double t);

/// g_i(x, n, .) in time: n = 0 is the atom at x/c_i of mass e^{-lambda x/c_i}; n >= 1 is a
/// density starting at x/c_i. x may be negative.
HybridFunction g_kernel(const KernelCache& k, int drift, double x, int n);

/// b_n(u, y) for n >= 1; the j = 0 term takes the full endpoint mass of f^{0*} = delta_0.
double b_kernel(const KernelCache& k, int n, double u, double y);

/// Coefficient of r^n in the expansion of T_{rho_i} f(x) (or T_{rho_i} Fbar(x) when
/// `survival`) as a transform in delta: int_0^{c_i t} f(x + s) g_i(s, n, t) ds.
double tf_value(const KernelCache& k, int drift, bool survival, double x, int n, double t);

/// tf_value sampled on the time grid as a density on [0, t_max].
HybridFunction tf_kernel(const KernelCache& k, int drift, bool survival, double x, int n);

/// Joint density of (ruin time, claim count) for the unrefracted process with premium c1,
/// built from the first-claim expression for n = 1 and the recursion through w(0, ., .).
class ClassicalDensity {
public:
    explicit ClassicalDensity(const KernelCache& cache);

    /// w_inf(0, n, .) for 1 <= n <= n_max.
    const HybridFunction& at_zero(int n) const;
    /// w_inf(u, n, .) for n = 1..n_max (index 0 unused).
    std::vector<HybridFunction> table(double u) const;
    HybridFunction density(double u, int n) const;

private:
    const KernelCache* cache_;
    std::vector<HybridFunction> zero_;
};

/// Solves g_k = a * h * trapezoid(K * g)_k + F_k on a uniform grid (forward substitution).
std::vector<double> solve_renewal(double a, std::span<const double> kernel,
                                  std::span<const double> forcing, double h);

/// Transform-domain quantities of the unrefracted model with premium c1: the root rho1,
/// phi_inf on [0, u_max] and nu on [0, u_max], both tabulated on a uniform amount grid.
class ClassicalTransform {
public:
    ClassicalTransform(const RiskModel& m, TransformParams p, double h_x, double u_max);

    double rho1() const { return rho1_; }
    double step() const { return h_; }
    double phi_inf(double u) const;
    double nu(double u) const;
    std::span<const double> phi_inf_grid() const { return phi_; }
    std::span<const double> nu_grid() const { return nu_; }
    /// Neumann-series evaluation of phi_inf(u) on the same grid (terms until < tol).
    double phi_inf_series(double u, double tol = 1e-12) const;
    /// Contraction factor (lambda r / c1) int T_{rho1} f.
    double contraction() const { return contraction_; }

private:
    RiskModel model_;
    TransformParams params_;
    double h_;
    double rho1_;
    double contraction_;
    std::vector<double> tf_;
    std::vector<double> tfbar_;
    std::vector<double> phi_;
    std::vector<double> nu_;
};

/// Linear interpolation of grid values v_k = v(k h), clamped at the ends.
double interpolate_grid(std::span<const double> v, double h, double x);

/// Integral of T_s f over [0, inf): (1 - f^(s)) / s, or E[X] at s = 0.
double dickson_hipp_mass(const ClaimDistribution& d, double s);

}  // namespace refract
