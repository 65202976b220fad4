#include "refract/classical.hpp"

#include "quadrature.hpp"
#include "refract/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace refract {

namespace {

constexpr double kPanel = 0.25;

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// Signed x^p for integer p >= 0 in log form: returns (log|x^p|, sign); x == 0 gives -inf unless p == 0.
struct LogPow {
    double log_abs;
    double sign;
};

LogPow log_pow(double x, int p) {
    if (p == 0) return {0.0, 1.0};
    if (x == 0.0) return {-INFINITY, 0.0};
    const double sign = (x < 0.0 && (p % 2 == 1)) ? -1.0 : 1.0;
    return {p * std::log(std::abs(x)), sign};
}

// int_0^a (x + s)-weighted claim integrals against s f^{n*}(a - s) for Erlang(K, beta) claims.
double erlang_tf(int K, double beta, bool survival, double x, int n, double a) {
    if (a <= 0.0) return 0.0;
    const int nk = n * K;
    double sum = 0.0;
    const double log_base = -beta * (x + a) + std::log(beta) * nk;
    const int i_lo = survival ? 0 : K - 1;
    for (int i = i_lo; i <= K - 1; ++i) {
        // survival: term beta^i (x+s)^i / i!; density: beta^K (x+s)^{K-1} / (K-1)!
        const double log_beta_i = std::log(beta) * (survival ? i : K);
        for (int j = 0; j <= i; ++j) {
            const LogPow xp = log_pow(x, i - j);
            if (xp.sign == 0.0) continue;
            const double l = log_base + log_beta_i + xp.log_abs - log_factorial(i - j) +
                             std::log(static_cast<double>(j + 1)) + (j + 1 + nk) * std::log(a) -
                             log_factorial(j + 1 + nk);
            sum += xp.sign * std::exp(l);
        }
    }
    return sum;
}

const Erlang* erlang_view(const ClaimDistribution& d, Erlang& scratch) {
    if (const auto* e = std::get_if<Exponential>(&d.law())) {
        scratch = Erlang{1, e->rate};
        return &scratch;
    }
    return std::get_if<Erlang>(&d.law());
}

}  // namespace

std::size_t TimeGrid::count() const {
    if (!(step > 0.0) || !(t_max > 0.0)) throw UsageError("TimeGrid: step and t_max must be positive");
    return static_cast<std::size_t>(std::llround(t_max / step)) + 1;
}

KernelCache::KernelCache(RiskModel model, TimeGrid grid, int n_max, double amount_max, double h_x)
    : model_(std::move(model)),
      grid_(grid),
      n_max_(n_max),
      powers_(model_.claims, n_max + 1, std::max(model_.c1, model_.c2) * grid.t_max + amount_max + 1.0,
              h_x) {
    model_.validate();
    (void)grid_.count();
}

double poisson_weight(double lambda, int n, double t) {
    if (n < 1) throw UsageError("poisson_weight: n must be >= 1");
    if (t == 0.0) return n == 1 ? lambda : 0.0;
    const LogPow tp = log_pow(t, n - 1);
    return tp.sign * std::exp(tp.log_abs - lambda * t + n * std::log(lambda) - log_factorial(n));
}

double g_value(const KernelCache& k, int drift, double x, int n, double t) {
    if (n < 1) throw UsageError("g_value: n must be >= 1 (n = 0 is an atom)");
    const double y = k.drift(drift) * t - x;
    if (y < 0.0 || x == 0.0) return 0.0;
    return x * poisson_weight(k.model().lambda, n, t) * k.powers().pdf(n, y);
}

HybridFunction g_kernel(const KernelCache& k, int drift, double x, int n) {
    const double c = k.drift(drift);
    const double lambda = k.model().lambda;
    const TimeGrid& g = k.grid();
    if (n == 0) return HybridFunction::unit_atom(Domain::time, g.step, x / c, std::exp(-lambda * x / c));
    const double start = x / c;
    if (start > g.t_max) return HybridFunction(Domain::time, g.step);
    const auto count = static_cast<std::size_t>(std::floor((g.t_max - start) / g.step + 1e-9)) + 1;
    return HybridFunction::sampled(Domain::time, start, g.step, count,
                                   [&](double t) { return g_value(k, drift, x, n, t); });
}

double b_kernel(const KernelCache& k, int n, double u, double y) {
    if (n < 1) throw UsageError("b_kernel: n must be >= 1");
    if (u < 0.0 || y < 0.0) throw DomainError("b_kernel: u and y must be nonnegative");
    const ConvolutionPowers& pw = k.powers();
    const double log_gamma_n = std::lgamma(static_cast<double>(n));
    double sum = std::pow(u, n - 1) * pw.pdf(n, y + u) / std::exp(log_gamma_n);
    double binom = 1.0;
    for (int j = 1; j <= n - 1; ++j) {
        binom *= static_cast<double>(n - j + 1) / j;
        const double integral = detail::gauss_panels(
            [&](double x) { return std::pow(u - x, n - 1) * pw.pdf(n - j, y + u - x) * pw.pdf(j, x); }, 0.0,
            u, kPanel);
        sum += ((j % 2 == 1) ? -binom : binom) * integral / std::exp(log_gamma_n);
    }
    return sum;
}

double tf_value(const KernelCache& k, int drift, bool survival, double x, int n, double t) {
    if (t < 0.0) return 0.0;
    const ClaimDistribution& d = k.model().claims;
    const double c = k.drift(drift);
    const double lambda = k.model().lambda;
    if (n == 0) return c * (survival ? d.survival(x + c * t) : d.pdf(x + c * t)) * std::exp(-lambda * t);
    const double a = c * t;
    const double w = poisson_weight(lambda, n, t);
    if (w == 0.0) return 0.0;
    Erlang scratch{};
    if (const Erlang* e = erlang_view(d, scratch)) return w * erlang_tf(e->shape, e->rate, survival, x, n, a);
    const ConvolutionPowers& pw = k.powers();
    const double integral = detail::gauss_panels(
        [&](double s) { return (survival ? d.survival(x + s) : d.pdf(x + s)) * s * pw.pdf(n, a - s); }, 0.0, a,
        kPanel);
    return w * integral;
}

HybridFunction tf_kernel(const KernelCache& k, int drift, bool survival, double x, int n) {
    const TimeGrid& g = k.grid();
    return HybridFunction::sampled(Domain::time, 0.0, g.step, g.count(),
                                   [&](double t) { return tf_value(k, drift, survival, x, n, t); });
}

ClassicalDensity::ClassicalDensity(const KernelCache& cache) : cache_(&cache) {
    const double lambda = cache.model().lambda;
    const double c1 = cache.model().c1;
    zero_.resize(static_cast<std::size_t>(cache.n_max()) + 1);
    for (int n = 1; n <= cache.n_max(); ++n) {
        HybridFunction f = tf_kernel(cache, 1, true, 0.0, n - 1);
        f *= lambda / c1;
        zero_[static_cast<std::size_t>(n)] = std::move(f);
    }
}

const HybridFunction& ClassicalDensity::at_zero(int n) const {
    if (n < 1 || n > cache_->n_max()) throw UsageError("ClassicalDensity: n out of range");
    return zero_[static_cast<std::size_t>(n)];
}

std::vector<HybridFunction> ClassicalDensity::table(double u) const {
    if (u < 0.0) throw DomainError("w_inf: u must be nonnegative");
    const KernelCache& k = *cache_;
    const RiskModel& m = k.model();
    const TimeGrid& g = k.grid();
    const std::size_t count = g.count();
    const int n_max = k.n_max();
    const ConvolutionPowers& pw = k.powers();

    std::vector<HybridFunction> out(static_cast<std::size_t>(n_max) + 1);
    if (n_max < 1) return out;
    out[1] = HybridFunction::sampled(Domain::time, 0.0, g.step, count, [&](double t) {
        return m.lambda * std::exp(-m.lambda * t) * m.claims.survival(u + m.c1 * t);
    });

    // E_j(s) = (lambda s)^j / j! e^{-lambda s} f^{j*}(u + c1 s)
    std::vector<HybridFunction> e(static_cast<std::size_t>(n_max));
    for (int j = 1; j < n_max; ++j)
        e[static_cast<std::size_t>(j)] = HybridFunction::sampled(Domain::time, 0.0, g.step, count, [&](double s) {
            return s * poisson_weight(m.lambda, j, s) * pw.pdf(j, u + m.c1 * s);
        });

    for (int n = 1; n + 1 <= n_max; ++n) {
        HybridFunction f = HybridFunction::sampled(Domain::time, 0.0, g.step, count, [&](double t) {
            const double y = u + m.c1 * t;
            const double lead = (n == 0) ? 1.0 : std::exp(n * std::log(m.lambda * t) - m.lambda * t - log_factorial(n));
            return (t == 0.0 ? 0.0 : lead) * m.lambda * (pw.cdf(n, y) - pw.cdf(n + 1, y));
        });
        for (int j = 1; j <= n; ++j)
            f.axpy(-m.c1, convolve(e[static_cast<std::size_t>(j)], zero_[static_cast<std::size_t>(n + 1 - j)], g.t_max));
        out[static_cast<std::size_t>(n) + 1] = f.resampled(0.0, count);
    }
    return out;
}

HybridFunction ClassicalDensity::density(double u, int n) const {
    if (n < 1 || n > cache_->n_max()) throw UsageError("w_inf: n out of range");
    return table(u)[static_cast<std::size_t>(n)];
}

std::vector<double> solve_renewal(double a, std::span<const double> kernel, std::span<const double> forcing,
                                  double h) {
    const std::size_t n = forcing.size();
    if (kernel.size() < n) throw UsageError("solve_renewal: kernel shorter than forcing");
    std::vector<double> g(n, 0.0);
    if (n == 0) return g;
    const double diag = 1.0 - 0.5 * a * h * kernel[0];
    if (!(std::abs(diag) > 1e-12)) throw NumericalError("solve_renewal: singular diagonal");
    g[0] = forcing[0];
    for (std::size_t k = 1; k < n; ++k) {
        double s = 0.5 * kernel[k] * g[0];
        for (std::size_t j = 1; j < k; ++j) s += kernel[j] * g[k - j];
        g[k] = (a * h * s + forcing[k]) / diag;
    }
    return g;
}

double interpolate_grid(std::span<const double> v, double h, double x) {
    if (v.empty()) throw UsageError("interpolate_grid: empty table");
    if (x <= 0.0) return v.front();
    const double pos = x / h;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) {
        if (pos > static_cast<double>(v.size() - 1) + 1e-6)
            throw DomainError("interpolate_grid: argument beyond tabulated range");
        return v.back();
    }
    const double w = pos - static_cast<double>(i);
    return v[i] + w * (v[i + 1] - v[i]);
}

double dickson_hipp_mass(const ClaimDistribution& d, double s) {
    if (s == 0.0) return d.mean();
    return (1.0 - d.laplace(s)) / s;
}

ClassicalTransform::ClassicalTransform(const RiskModel& m, TransformParams p, double h_x, double u_max)
    : model_(m), params_(p) {
    m.validate();
    p.validate();
    if (!(h_x > 0.0) || !(u_max >= 0.0)) throw UsageError("ClassicalTransform: bad amount grid");
    const auto n = static_cast<std::size_t>(std::ceil(u_max / h_x - 1e-9)) + 1;
    h_ = n > 1 ? u_max / static_cast<double>(n - 1) : h_x;
    rho1_ = solve_root(m.lambda, m.c1, p, m.claims);
    const double a = m.lambda * p.r / m.c1;
    contraction_ = a * dickson_hipp_mass(m.claims, rho1_);
    if (!(contraction_ < 1.0))
        throw NumericalError("classical renewal equation is not a contraction (factor " +
                             std::to_string(contraction_) + ")");
    tf_.resize(n);
    tfbar_.resize(n);
    std::vector<double> forcing(n), expo(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = h_ * static_cast<double>(i);
        tf_[i] = m.claims.dickson_hipp_pdf(rho1_, x);
        tfbar_[i] = m.claims.dickson_hipp_survival(rho1_, x);
        forcing[i] = a * tfbar_[i];
        expo[i] = std::exp(rho1_ * x);
    }
    phi_ = solve_renewal(a, tf_, forcing, h_);
    nu_ = solve_renewal(a, tf_, expo, h_);
}

double ClassicalTransform::phi_inf(double u) const {
    if (u < 0.0) throw DomainError("phi_inf: u must be nonnegative");
    return interpolate_grid(phi_, h_, u);
}

double ClassicalTransform::nu(double u) const {
    if (u < 0.0) throw DomainError("nu: u must be nonnegative");
    return interpolate_grid(nu_, h_, u);
}

double ClassicalTransform::phi_inf_series(double u, double tol) const {
    const double a = model_.lambda * params_.r / model_.c1;
    std::vector<double> term(tfbar_.size());
    for (std::size_t i = 0; i < term.size(); ++i) term[i] = a * tfbar_[i];
    double total = 0.0;
    for (int it = 0; it < 10000; ++it) {
        const double v = interpolate_grid(term, h_, u);
        total += v;
        double biggest = 0.0;
        for (double x : term) biggest = std::max(biggest, std::abs(x));
        if (biggest < tol) return total;
        term = trapezoid_convolution(tf_, term, h_, term.size());
        for (double& x : term) x *= a;
    }
    throw NumericalError("phi_inf_series: no convergence");
}

}  // namespace refract
