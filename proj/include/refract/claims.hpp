#pragma once

#include "refract/hybrid.hpp"

#include <cstddef>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace refract {

struct Exponential {
    double rate;
};

struct Erlang {
    int shape;
    double rate;
};

struct ExponentialMixture {
    std::vector<double> weights;
    std::vector<double> rates;
};

/// Density given by samples at strictly increasing abscissae, linear in between.
struct TabulatedDensity {
    std::vector<double> x;
    std::vector<double> f;
};

/// Claim-size law. Parametric variants use closed forms throughout; the tabulated
/// variant integrates its piecewise-linear density segment by segment.
class ClaimDistribution {
public:
    using Variant = std::variant<Exponential, Erlang, ExponentialMixture, TabulatedDensity>;

    explicit ClaimDistribution(Variant law);

    static ClaimDistribution exponential(double rate) { return ClaimDistribution(Exponential{rate}); }
    static ClaimDistribution erlang(int shape, double rate) {
        return ClaimDistribution(Erlang{shape, rate});
    }
    static ClaimDistribution mixture(std::vector<double> weights, std::vector<double> rates) {
        return ClaimDistribution(ExponentialMixture{std::move(weights), std::move(rates)});
    }
    static ClaimDistribution tabulated(double step, std::vector<double> samples);
    /// Two-column CSV (x, f(x)) with strictly increasing x; an optional header row is skipped.
    static ClaimDistribution load_csv(const std::filesystem::path& path);

    const Variant& law() const { return law_; }
    std::string describe() const;
    bool is_tabulated() const { return std::holds_alternative<TabulatedDensity>(law_); }

    double mean() const { return mean_; }
    double pdf(double x) const;
    double cdf(double x) const;
    double survival(double x) const;

    /// Laplace transform f^(s). Parametric laws accept s above the largest pole
    /// (-min rate) by a margin of 1e-9; tabulated laws require s >= 0.
    double laplace(double s) const;
    /// d/ds f^(s) = -int y e^{-sy} f(y) dy.
    double laplace_derivative(double s) const;

    /// Dickson-Hipp operator T_s f(x) = int_x^inf e^{-s(y-x)} f(y) dy.
    double dickson_hipp_pdf(double s, double x) const;
    /// T_s Fbar(x) = int_x^inf e^{-s(y-x)} Fbar(y) dy.
    double dickson_hipp_survival(double s, double x) const;

    /// x with survival(x) <= eps (upper end of the support for tabulated laws).
    double upper_quantile(double eps) const;

    /// f^{n*} on the amount grid [0, x_max]; n = 0 gives the unit atom at 0.
    HybridFunction convolve_n(int n, double step, double x_max) const;

    template <class Urng>
    double sample(Urng& g) const;

private:
    Variant law_;
    double mean_ = 0.0;
    std::vector<double> tab_cdf_;  // cumulative integral at tabulated nodes

    double sample_tabulated(double uniform) const;
};

/// Evaluates the n-fold convolution powers f^{n*}(y) and their distribution
/// functions F^{n*}(y) for n <= n_max and 0 <= y <= y_max.
/// Exponential and Erlang use the Erlang closed form; other laws are tabulated on a
/// grid of step h by iterated trapezoid convolution and read back by interpolation.
class ConvolutionPowers {
public:
    ConvolutionPowers(const ClaimDistribution& d, int n_max, double y_max, double h);

    int n_max() const { return n_max_; }
    /// f^{n*}(y) for n >= 1 (zero for y < 0).
    double pdf(int n, double y) const;
    /// F^{n*}(y) for n >= 0 (F^{0*} = 1 on y >= 0).
    double cdf(int n, double y) const;

private:
    const ClaimDistribution* dist_;
    int n_max_;
    double y_max_;
    double h_;
    int erlang_shape_ = 0;  // > 0 when closed forms apply
    double erlang_rate_ = 0.0;
    std::vector<std::vector<double>> pdf_tab_;
    std::vector<std::vector<double>> cdf_tab_;

    double interp(const std::vector<double>& tab, double y) const;
};

/// Erlang(k, rate) density at x, stable for large k.
double erlang_pdf(int k, double rate, double x);

template <class Urng>
double ClaimDistribution::sample(Urng& g) const {
    struct Visitor {
        Urng& g;
        const ClaimDistribution& self;
        double operator()(const Exponential& e) const {
            return std::exponential_distribution<double>(e.rate)(g);
        }
        double operator()(const Erlang& e) const {
            return std::gamma_distribution<double>(e.shape, 1.0 / e.rate)(g);
        }
        double operator()(const ExponentialMixture& m) const {
            std::discrete_distribution<std::size_t> pick(m.weights.begin(), m.weights.end());
            return std::exponential_distribution<double>(m.rates[pick(g)])(g);
        }
        double operator()(const TabulatedDensity&) const {
            return self.sample_tabulated(std::uniform_real_distribution<double>(0.0, 1.0)(g));
        }
    };
    return std::visit(Visitor{g, *this}, law_);
}

}  // namespace refract
