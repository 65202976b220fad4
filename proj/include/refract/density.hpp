#pragma once

#include "refract/classical.hpp"
#include "refract/fft.hpp"
#include "refract/hybrid.hpp"
#include "refract/model.hpp"

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace refract {

enum class Side { below, above };

std::string to_string(Side s);

/// w(u, n, t) for n = 1..n_max on the time grid t_k = k * step, k = 0..size()-1.
/// The sample at t = 0 is the right limit.
struct DensityTable {
    double u = 0.0;
    Side side = Side::below;
    double step = 0.0;
    int n_max = 0;
    std::vector<std::vector<double>> rows;  // rows[n - 1][k]
    std::size_t clamped = 0;                // negative samples set to zero
    double most_negative = 0.0;             // before clamping

    std::size_t size() const { return rows.empty() ? 0 : rows.front().size(); }
    double t(std::size_t k) const { return step * static_cast<double>(k); }
    const std::vector<double>& row(int n) const;
    /// Linear interpolation in t (zero outside the grid).
    double value(int n, double t) const;
    /// Mean of w(u, n, .) over [lo, hi] under linear interpolation.
    double bin_average(int n, double lo, double hi) const;
    double mass(int n) const;
    double total() const;
    /// sum_n r^n int e^{-delta t} w(u, n, t) dt (trapezoid).
    double transform(double delta, double r) const;
    HybridFunction column(int n) const;
    /// Rows "n,t,w".
    void write_csv(std::ostream& os) const;
};

struct DensityOptions {
    double t_max = 20.0;
    std::size_t time_points = 4000;  // target; the step is shrunk to fit the lattice
    double amount_step = 0.05;       // target step of the capital grid
    int n_max = 20;
    double negative_tolerance = 1e-6;
};

/// Resolved discretisation shared by every table of an engine.
struct DensityGrid {
    double dt;        // time step
    double h;         // capital step; h / c1 is a whole number of time steps
    int q;            // time steps per capital step at premium c1
    int J;            // b = J * h
    int Y;            // capital nodes above b
    long nt;          // time steps covering [0, t_max]
    long k0;          // time steps covering b / c1
    std::size_t len;  // lattice samples: t in [-b/c1, t_max + b/c1]
    std::size_t fft_size;
    int n_max;

    double t_max() const { return dt * static_cast<double>(nt); }
};

/// Joint density of (tau, N_tau) for the refracted model, computed as power series in the
/// claim-count marker whose coefficients are functions of time. Everything is tabulated once
/// on a capital grid with b and the requested levels as nodes where possible.
class DensityEngine {
public:
    /// `levels` are the initial capitals the engine should place on its grid.
    DensityEngine(const RiskModel& m, DensityOptions opt, std::vector<double> levels);
    ~DensityEngine();
    DensityEngine(const DensityEngine&) = delete;
    DensityEngine& operator=(const DensityEngine&) = delete;

    const DensityGrid& grid() const;
    const RiskModel& model() const;
    const KernelCache& kernels() const;

    /// w1 for u in [0, b], w2 for u in (b, b + Y h].
    DensityTable density(double u) const;
    DensityTable w1(double u) const;
    DensityTable w2(double u) const;
    /// Classical (unrefracted, premium c1) density.
    DensityTable w_inf(double u) const;

    /// Coefficients of nu(v) as time functions; n = 0 is the atom at -v/c1.
    HybridFunction nu_density(double v, int n) const;
    HybridFunction sigma_kernel(int n) const;
    HybridFunction gamma_kernel(int n) const;
    /// Throws UsageError when m < n.
    HybridFunction vartheta(double u, int m, int n) const;
    HybridFunction epsilon_kernel(double y, int n) const;

    /// w1 through the recursion sum_n sigma(m-n) * w1(u, n) = sum_n vartheta(u, m, n).
    DensityTable w1_by_vartheta(double u) const;
    /// w2 through the explicit triple sum over (k, n, p) with kernels b_p, for m <= m_max.
    DensityTable w2_explicit(double u, int m_max) const;

    /// Two candidate closed forms for the one-claim density below b; diagnostics only.
    static double candidate_w1_first(const RiskModel& m, double u, double t);
    static double candidate_w1_second(const RiskModel& m, double u, double t);
    /// Density of ruin at the first claim, from the first-claim geometry.
    static double first_claim_density(const RiskModel& m, double u, double t);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace refract
