#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace refract {

enum class Domain { time, amount };

struct Atom {
    double location;
    double mass;
};

/// A function of one variable made of point masses plus a density sampled on a
/// uniform grid. Grid samples hold right limits at the support start and the
/// density is zero outside [origin, origin + step * (size - 1)].
class HybridFunction {
public:
    HybridFunction() = default;
    HybridFunction(Domain domain, double step);

    static HybridFunction unit_atom(Domain domain, double step, double location = 0.0,
                                    double mass = 1.0);
    static HybridFunction from_samples(Domain domain, double origin, double step,
                                       std::vector<double> samples);

    template <class F>
    static HybridFunction sampled(Domain domain, double origin, double step, std::size_t count,
                                  F&& f) {
        std::vector<double> s(count);
        for (std::size_t i = 0; i < count; ++i) s[i] = f(origin + step * static_cast<double>(i));
        return from_samples(domain, origin, step, std::move(s));
    }

    Domain domain() const { return domain_; }
    double step() const { return step_; }
    double origin() const { return origin_; }
    /// Location of the last grid sample (origin when the grid is empty).
    double grid_end() const;
    std::span<const double> samples() const { return samples_; }
    std::vector<double>& mutable_samples() { return samples_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    bool has_grid() const { return !samples_.empty(); }

    /// Adds a point mass, merging with an existing atom at the same location.
    void add_atom(double location, double mass);

    /// Density part at x by linear interpolation; zero outside the grid.
    double density_at(double x) const;

    /// Atom masses with location in [lo, hi] plus the integral of the interpolated density.
    double integrate(double lo, double hi) const;
    double integrate() const;

    /// sum_i mass_i e^{-delta loc_i} + trapezoid of e^{-delta x} density(x).
    double laplace_at(double delta) const;

    HybridFunction& operator+=(const HybridFunction& other);
    HybridFunction& operator-=(const HybridFunction& other);
    HybridFunction& operator*=(double alpha);

    /// Adds alpha * other in place.
    HybridFunction& axpy(double alpha, const HybridFunction& other);

    /// Returns factor * f(x - by).
    HybridFunction shifted(double by, double factor = 1.0) const;

    /// Drops atoms and grid samples located beyond x_end.
    void truncate_after(double x_end);

    /// Restricts the density to the grid nodes origin0 + k*step for k in [0, count),
    /// resampling by linear interpolation when the lattices are not aligned.
    HybridFunction resampled(double origin0, std::size_t count) const;

    /// Largest |atom mass| and |sample|.
    double max_abs() const;

    /// Removes atoms with |mass| below tol.
    void prune_atoms(double tol);

    void write_csv(std::ostream& os) const;
    static HybridFunction read_csv(std::istream& is);

private:
    Domain domain_ = Domain::time;
    double step_ = 0.0;
    double origin_ = 0.0;
    std::vector<double> samples_;
    std::vector<Atom> atoms_;

    void require_compatible(const HybridFunction& other) const;
};

HybridFunction operator+(HybridFunction a, const HybridFunction& b);
HybridFunction operator-(HybridFunction a, const HybridFunction& b);
HybridFunction operator*(double alpha, HybridFunction f);

/// (a * b)(t) = integral a(x) b(t - x) dx with atoms carried exactly; the density part
/// uses the trapezoid rule on the overlap of the two supports. Output beyond x_end is dropped.
HybridFunction convolve(const HybridFunction& a, const HybridFunction& b,
                        double x_end = std::numeric_limits<double>::infinity());

/// Trapezoid convolution of two sampled densities starting at their first samples:
/// c_k = step * (sum_j a_j b_{k-j} with half weight on both ends of the overlap).
/// `raw_sums`, when given, must hold the plain sums sum_j a_j b_{k-j}.
std::vector<double> trapezoid_convolution(std::span<const double> a, std::span<const double> b,
                                          double step, std::size_t max_len,
                                          std::vector<double> raw_sums = {});

/// Turns plain convolution sums into trapezoid sums (no step factor) in place.
void apply_trapezoid_ends(std::span<double> sums, std::span<const double> a,
                          std::span<const double> b);

}  // namespace refract
