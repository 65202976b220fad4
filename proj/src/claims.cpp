#include "refract/claims.hpp"

#include "refract/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace refract {

namespace {

using GaussRule = boost::math::quadrature::gauss<double, 10>;

constexpr double kPoleMargin = 1e-9;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_x(double x, const char* what) {
    if (!(x >= 0.0)) throw DomainError(std::string(what) + ": argument must be >= 0");
}

// T_s f(x) for Erlang(k, b): e^{-bx} b^k sum_j x^{k-1-j}/(k-1-j)! (b+s)^{-(j+1)}.
double erlang_dickson_hipp_pdf(int k, double b, double s, double x) {
    const double a = b + s;
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
        const int p = k - 1 - j;
        if (p > 0 && x == 0.0) continue;
        const double logx = p > 0 ? p * std::log(x) : 0.0;
        sum += std::exp(logx - std::lgamma(p + 1.0) - (j + 1) * std::log(a));
    }
    return std::exp(-b * x + k * std::log(b)) * sum;
}

// T_s Fbar(x) for Erlang(k, b): e^{-bx} sum_{i<k} b^i sum_{j<=i} x^{i-j}/(i-j)! (b+s)^{-(j+1)}.
double erlang_dickson_hipp_survival(int k, double b, double s, double x) {
    const double a = b + s;
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j <= i; ++j) {
            const int p = i - j;
            if (p > 0 && x == 0.0) continue;
            const double logx = p > 0 ? p * std::log(x) : 0.0;
            sum += std::exp(i * std::log(b) + logx - std::lgamma(p + 1.0) - (j + 1) * std::log(a));
        }
    }
    return std::exp(-b * x) * sum;
}

}  // namespace

double erlang_pdf(int k, double rate, double x) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) return k == 1 ? rate : 0.0;
    return std::exp(k * std::log(rate) + (k - 1) * std::log(x) - rate * x - std::lgamma(k));
}

ClaimDistribution::ClaimDistribution(Variant law) : law_(std::move(law)) {
    std::visit(
        Overloaded{
            [&](const Exponential& e) {
                if (!(e.rate > 0.0)) throw ConfigError("Exponential: rate must be > 0");
                mean_ = 1.0 / e.rate;
            },
            [&](const Erlang& e) {
                if (e.shape < 1) throw ConfigError("Erlang: shape must be >= 1");
                if (!(e.rate > 0.0)) throw ConfigError("Erlang: rate must be > 0");
                mean_ = e.shape / e.rate;
            },
            [&](const ExponentialMixture& m) {
                if (m.weights.empty() || m.weights.size() != m.rates.size())
                    throw ConfigError("mixture: weights and rates must be non-empty and equal length");
                double total = 0.0;
                for (std::size_t i = 0; i < m.weights.size(); ++i) {
                    if (!(m.weights[i] > 0.0)) throw ConfigError("mixture: weights must be > 0");
                    if (!(m.rates[i] > 0.0)) throw ConfigError("mixture: rates must be > 0");
                    total += m.weights[i];
                    mean_ += m.weights[i] / m.rates[i];
                }
                if (std::abs(total - 1.0) > 1e-9)
                    throw ConfigError("mixture: weights must sum to 1 (got " + std::to_string(total) + ")");
            },
            [&](TabulatedDensity& t) {
                if (t.x.size() < 2 || t.x.size() != t.f.size())
                    throw ConfigError("tabulated: need at least two (x, f) pairs");
                if (t.x.front() < 0.0) throw ConfigError("tabulated: x must be >= 0");
                for (std::size_t i = 1; i < t.x.size(); ++i)
                    if (!(t.x[i] > t.x[i - 1])) throw ConfigError("tabulated: x must be strictly increasing");
                for (double v : t.f)
                    if (!(v >= 0.0)) throw ConfigError("tabulated: density values must be >= 0");
                double total = 0.0;
                for (std::size_t i = 1; i < t.x.size(); ++i)
                    total += 0.5 * (t.x[i] - t.x[i - 1]) * (t.f[i] + t.f[i - 1]);
                if (!(total > 0.0)) throw ConfigError("tabulated: density integrates to zero");
                for (double& v : t.f) v /= total;
                tab_cdf_.assign(t.x.size(), 0.0);
                for (std::size_t i = 1; i < t.x.size(); ++i) {
                    const double a = t.x[i - 1];
                    const double b = t.x[i];
                    tab_cdf_[i] = tab_cdf_[i - 1] + 0.5 * (b - a) * (t.f[i] + t.f[i - 1]);
                    mean_ += (b - a) / 6.0 * (2 * a * t.f[i - 1] + a * t.f[i] + b * t.f[i - 1] + 2 * b * t.f[i]);
                }
                // mass on [0, x0) is zero; shift of the support is already in the moments
            },
        },
        law_);
}

ClaimDistribution ClaimDistribution::tabulated(double step, std::vector<double> samples) {
    if (!(step > 0.0)) throw ConfigError("tabulated: step must be > 0");
    TabulatedDensity t;
    t.x.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) t.x[i] = step * static_cast<double>(i);
    t.f = std::move(samples);
    return ClaimDistribution(std::move(t));
}

ClaimDistribution ClaimDistribution::load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open claim density file " + path.string());
    TabulatedDensity t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double x = 0.0;
        double f = 0.0;
        if (!(ls >> x >> f)) {
            if (first) {
                first = false;
                continue;
            }
            throw ConfigError("claim density file: malformed row '" + line + "'");
        }
        first = false;
        t.x.push_back(x);
        t.f.push_back(f);
    }
    return ClaimDistribution(std::move(t));
}

std::string ClaimDistribution::describe() const {
    std::ostringstream os;
    std::visit(Overloaded{
                   [&](const Exponential& e) { os << "Exponential(rate=" << e.rate << ")"; },
                   [&](const Erlang& e) { os << "Erlang(shape=" << e.shape << ", rate=" << e.rate << ")"; },
                   [&](const ExponentialMixture& m) { os << "ExponentialMixture(" << m.weights.size() << " components)"; },
                   [&](const TabulatedDensity& t) { os << "Tabulated(" << t.x.size() << " points)"; },
               },
               law_);
    return os.str();
}

double ClaimDistribution::pdf(double x) const {
    check_x(x, "pdf");
    return std::visit(
        Overloaded{
            [&](const Exponential& e) { return e.rate * std::exp(-e.rate * x); },
            [&](const Erlang& e) { return erlang_pdf(e.shape, e.rate, x); },
            [&](const ExponentialMixture& m) {
                double s = 0.0;
                for (std::size_t i = 0; i < m.rates.size(); ++i)
                    s += m.weights[i] * m.rates[i] * std::exp(-m.rates[i] * x);
                return s;
            },
            [&](const TabulatedDensity& t) {
                if (x < t.x.front() || x > t.x.back()) return 0.0;
                const auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
                if (it == t.x.end()) return t.f.back();
                const auto i = static_cast<std::size_t>(it - t.x.begin()) - 1;
                const double w = (x - t.x[i]) / (t.x[i + 1] - t.x[i]);
                return t.f[i] + w * (t.f[i + 1] - t.f[i]);
            },
        },
        law_);
}

double ClaimDistribution::cdf(double x) const {
    check_x(x, "cdf");
    return std::visit(
        Overloaded{
            [&](const Exponential& e) { return -std::expm1(-e.rate * x); },
            [&](const Erlang& e) { return boost::math::gamma_p(static_cast<double>(e.shape), e.rate * x); },
            [&](const ExponentialMixture& m) {
                double s = 0.0;
                for (std::size_t i = 0; i < m.rates.size(); ++i)
                    s += m.weights[i] * -std::expm1(-m.rates[i] * x);
                return s;
            },
            [&](const TabulatedDensity& t) {
                if (x <= t.x.front()) return 0.0;
                if (x >= t.x.back()) return 1.0;
                const auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
                const auto i = static_cast<std::size_t>(it - t.x.begin()) - 1;
                const double d = x - t.x[i];
                const double slope = (t.f[i + 1] - t.f[i]) / (t.x[i + 1] - t.x[i]);
                return tab_cdf_[i] + t.f[i] * d + 0.5 * slope * d * d;
            },
        },
        law_);
}

double ClaimDistribution::survival(double x) const {
    check_x(x, "survival");
    return std::visit(
        Overloaded{
            [&](const Exponential& e) { return std::exp(-e.rate * x); },
            [&](const Erlang& e) { return boost::math::gamma_q(static_cast<double>(e.shape), e.rate * x); },
            [&](const ExponentialMixture& m) {
                double s = 0.0;
                for (std::size_t i = 0; i < m.rates.size(); ++i) s += m.weights[i] * std::exp(-m.rates[i] * x);
                return s;
            },
            [&](const TabulatedDensity&) { return 1.0 - cdf(x); },
        },
        law_);
}

double ClaimDistribution::laplace(double s) const {
    return std::visit(
        Overloaded{
            [&](const Exponential& e) {
                if (!(s > -e.rate + kPoleMargin)) throw DomainError("laplace: s at or beyond pole -rate");
                return e.rate / (e.rate + s);
            },
            [&](const Erlang& e) {
                if (!(s > -e.rate + kPoleMargin)) throw DomainError("laplace: s at or beyond pole -rate");
                return std::pow(e.rate / (e.rate + s), e.shape);
            },
            [&](const ExponentialMixture& m) {
                double v = 0.0;
                for (std::size_t i = 0; i < m.rates.size(); ++i) {
                    if (!(s > -m.rates[i] + kPoleMargin)) throw DomainError("laplace: s at or beyond a pole");
                    v += m.weights[i] * m.rates[i] / (m.rates[i] + s);
                }
                return v;
            },
            [&](const TabulatedDensity&) {
                if (!(s >= 0.0)) throw DomainError("laplace: tabulated law requires s >= 0");
                return dickson_hipp_pdf(s, 0.0);
            },
        },
        law_);
}

double ClaimDistribution::laplace_derivative(double s) const {
    const double v = laplace(s);  // validates s against the poles
    return std::visit(
        Overloaded{
            [&](const Exponential& e) { return -v / (e.rate + s); },
            [&](const Erlang& e) { return -e.shape * v / (e.rate + s); },
            [&](const ExponentialMixture& m) {
                double d = 0.0;
                for (std::size_t i = 0; i < m.rates.size(); ++i)
                    d -= m.weights[i] * m.rates[i] / ((m.rates[i] + s) * (m.rates[i] + s));
                return d;
            },
            [&](const TabulatedDensity& t) {
                double d = 0.0;
                for (std::size_t i = 0; i + 1 < t.x.size(); ++i)
                    d -= GaussRule::integrate([&](double y) { return y * std::exp(-s * y) * pdf(y); },
                                              t.x[i], t.x[i + 1]);
                return d;
            },
        },
        law_);
}

double ClaimDistribution::dickson_hipp_pdf(double s, double x) const {
    check_x(x, "dickson_hipp_pdf");
    return std::visit(
        Overloaded{
            [&](const Exponential& e) {
                if (!(s > -e.rate + kPoleMargin)) throw DomainError("dickson_hipp_pdf: s at or beyond pole");
                return e.rate * std::exp(-e.rate * x) / (e.rate + s);
            },
            [&](const Erlang& e) {
                if (!(s > -e.rate + kPoleMargin)) throw DomainError("dickson_hipp_pdf: s at or beyond pole");
                return erlang_dickson_hipp_pdf(e.shape, e.rate, s, x);
            },
            [&](const ExponentialMixture& m) {
                double v = 0.0;
                for (std::size_t i = 0; i < m.rates.size(); ++i) {
                    if (!(s > -m.rates[i] + kPoleMargin)) throw DomainError("dickson_hipp_pdf: s at or beyond pole");
                    v += m.weights[i] * m.rates[i] * std::exp(-m.rates[i] * x) / (m.rates[i] + s);
                }
                return v;
            },
            [&](const TabulatedDensity& t) {
                if (!(s >= 0.0)) throw DomainError("dickson_hipp_pdf: tabulated law requires s >= 0");
                double v = 0.0;
                for (std::size_t i = 0; i + 1 < t.x.size(); ++i) {
                    const double a = std::max(x, t.x[i]);
                    const double b = t.x[i + 1];
                    if (b <= a) continue;
                    v += GaussRule::integrate([&](double y) { return std::exp(-s * (y - x)) * pdf(y); }, a, b);
                }
                return v;
            },
        },
        law_);
}

double ClaimDistribution::dickson_hipp_survival(double s, double x) const {
    check_x(x, "dickson_hipp_survival");
    return std::visit(
        Overloaded{
            [&](const Exponential& e) {
                if (!(s > -e.rate + kPoleMargin)) throw DomainError("dickson_hipp_survival: s at or beyond pole");
                return std::exp(-e.rate * x) / (e.rate + s);
            },
            [&](const Erlang& e) {
                if (!(s > -e.rate + kPoleMargin)) throw DomainError("dickson_hipp_survival: s at or beyond pole");
                return erlang_dickson_hipp_survival(e.shape, e.rate, s, x);
            },
            [&](const ExponentialMixture& m) {
                double v = 0.0;
                for (std::size_t i = 0; i < m.rates.size(); ++i) {
                    if (!(s > -m.rates[i] + kPoleMargin)) throw DomainError("dickson_hipp_survival: s at or beyond pole");
                    v += m.weights[i] * std::exp(-m.rates[i] * x) / (m.rates[i] + s);
                }
                return v;
            },
            [&](const TabulatedDensity& t) {
                if (!(s >= 0.0)) throw DomainError("dickson_hipp_survival: tabulated law requires s >= 0");
                double v = 0.0;
                if (x < t.x.front()) {
                    const double len = t.x.front() - x;
                    v += s > 0.0 ? -std::expm1(-s * len) / s : len;
                }
                for (std::size_t i = 0; i + 1 < t.x.size(); ++i) {
                    const double a = std::max(x, t.x[i]);
                    const double b = t.x[i + 1];
                    if (b <= a) continue;
                    v += GaussRule::integrate([&](double y) { return std::exp(-s * (y - x)) * survival(y); }, a, b);
                }
                return v;
            },
        },
        law_);
}

double ClaimDistribution::upper_quantile(double eps) const {
    if (const auto* t = std::get_if<TabulatedDensity>(&law_)) return t->x.back();
    if (const auto* e = std::get_if<Exponential>(&law_)) return -std::log(eps) / e->rate;
    double hi = mean_;
    while (survival(hi) > eps) hi *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (survival(mid) > eps ? lo : hi) = mid;
    }
    return hi;
}

HybridFunction ClaimDistribution::convolve_n(int n, double step, double x_max) const {
    if (n < 0) throw UsageError("convolve_n: n must be >= 0");
    if (n == 0) return HybridFunction::unit_atom(Domain::amount, step);
    const auto count = static_cast<std::size_t>(std::floor(x_max / step + 1e-9)) + 1;
    const auto* ex = std::get_if<Exponential>(&law_);
    const auto* er = std::get_if<Erlang>(&law_);
    if (ex || er) {
        const int k = ex ? n : n * er->shape;
        const double rate = ex ? ex->rate : er->rate;
        return HybridFunction::sampled(Domain::amount, 0.0, step, count,
                                       [&](double y) { return erlang_pdf(k, rate, y); });
    }
    std::vector<double> base(count);
    for (std::size_t i = 0; i < count; ++i) base[i] = pdf(step * static_cast<double>(i));
    std::vector<double> power = base;
    for (int m = 2; m <= n; ++m) power = trapezoid_convolution(power, base, step, count);
    return HybridFunction::from_samples(Domain::amount, 0.0, step, std::move(power));
}

double ClaimDistribution::sample_tabulated(double uniform) const {
    const auto& t = std::get<TabulatedDensity>(law_);
    const auto it = std::upper_bound(tab_cdf_.begin(), tab_cdf_.end(), uniform);
    if (it == tab_cdf_.end()) return t.x.back();
    if (it == tab_cdf_.begin()) return t.x.front();
    const auto i = static_cast<std::size_t>(it - tab_cdf_.begin()) - 1;
    const double need = uniform - tab_cdf_[i];
    const double len = t.x[i + 1] - t.x[i];
    const double slope = (t.f[i + 1] - t.f[i]) / len;
    double d;
    if (std::abs(slope) < 1e-14) {
        d = t.f[i] > 0.0 ? need / t.f[i] : 0.0;
    } else {
        const double disc = std::max(0.0, t.f[i] * t.f[i] + 2.0 * slope * need);
        d = (-t.f[i] + std::sqrt(disc)) / slope;
    }
    return t.x[i] + std::clamp(d, 0.0, len);
}

ConvolutionPowers::ConvolutionPowers(const ClaimDistribution& d, int n_max, double y_max, double h)
    : dist_(&d), n_max_(n_max), y_max_(y_max), h_(h) {
    if (n_max < 0) throw UsageError("ConvolutionPowers: n_max must be >= 0");
    if (const auto* e = std::get_if<Exponential>(&d.law())) {
        erlang_shape_ = 1;
        erlang_rate_ = e->rate;
        return;
    }
    if (const auto* e = std::get_if<Erlang>(&d.law())) {
        erlang_shape_ = e->shape;
        erlang_rate_ = e->rate;
        return;
    }
    if (!(h > 0.0) || !(y_max > 0.0)) throw UsageError("ConvolutionPowers: need positive grid step and range");
    const auto count = static_cast<std::size_t>(std::ceil(y_max / h)) + 2;
    std::vector<double> base(count);
    for (std::size_t i = 0; i < count; ++i) base[i] = d.pdf(h * static_cast<double>(i));
    pdf_tab_.resize(static_cast<std::size_t>(n_max) + 1);
    cdf_tab_.resize(static_cast<std::size_t>(n_max) + 1);
    if (n_max >= 1) pdf_tab_[1] = base;
    for (int n = 2; n <= n_max; ++n)
        pdf_tab_[static_cast<std::size_t>(n)] =
            trapezoid_convolution(pdf_tab_[static_cast<std::size_t>(n) - 1], base, h, count);
    for (int n = 1; n <= n_max; ++n) {
        const auto& p = pdf_tab_[static_cast<std::size_t>(n)];
        auto& c = cdf_tab_[static_cast<std::size_t>(n)];
        c.assign(p.size(), 0.0);
        for (std::size_t i = 1; i < p.size(); ++i) c[i] = c[i - 1] + 0.5 * h * (p[i] + p[i - 1]);
        if (n == 1)
            for (std::size_t i = 0; i < p.size(); ++i) c[i] = d.cdf(h * static_cast<double>(i));
    }
}

double ConvolutionPowers::interp(const std::vector<double>& tab, double y) const {
    const double pos = y / h_;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= tab.size()) return tab.back();
    const double w = pos - static_cast<double>(i);
    return tab[i] + w * (tab[i + 1] - tab[i]);
}

double ConvolutionPowers::pdf(int n, double y) const {
    if (n < 1 || n > n_max_) throw UsageError("ConvolutionPowers::pdf: order out of range");
    if (y < 0.0) return 0.0;
    if (erlang_shape_ > 0) return erlang_pdf(n * erlang_shape_, erlang_rate_, y);
    if (n == 1) return dist_->pdf(y);
    if (y > y_max_ + h_) throw UsageError("ConvolutionPowers::pdf: argument beyond tabulated range");
    return interp(pdf_tab_[static_cast<std::size_t>(n)], y);
}

double ConvolutionPowers::cdf(int n, double y) const {
    if (n < 0 || n > n_max_ + 1) throw UsageError("ConvolutionPowers::cdf: order out of range");
    if (y < 0.0) return 0.0;
    if (n == 0) return 1.0;
    if (erlang_shape_ > 0) return boost::math::gamma_p(static_cast<double>(n * erlang_shape_), erlang_rate_ * y);
    if (n == 1) return dist_->cdf(y);
    if (n > n_max_) throw UsageError("ConvolutionPowers::cdf: order out of range");
    if (y > y_max_ + h_) throw UsageError("ConvolutionPowers::cdf: argument beyond tabulated range");
    return interp(cdf_tab_[static_cast<std::size_t>(n)], y);
}

}  // namespace refract
