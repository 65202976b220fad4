#include "refract/claims.hpp"
#include "refract/errors.hpp"

#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace refract;
using doctest::Approx;

namespace {

double tail(const std::function<double(double)>& f, double a) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate([&](double y) { return f(a + y); }, 1e-12);
}

double finite(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12);
}

ClaimDistribution triangle() {
    // density 2(1 - x) on [0, 1] sampled at step 0.01
    std::vector<double> s(101);
    for (int i = 0; i <= 100; ++i) s[i] = 2.0 * (1.0 - 0.01 * i);
    return ClaimDistribution::tabulated(0.01, s);
}

}  // namespace

TEST_SUITE("claims") {

TEST_CASE("pdf values") {
    CHECK(ClaimDistribution::exponential(1.0).pdf(0.0) == Approx(1.0));
    CHECK(ClaimDistribution::erlang(2, 1.0).pdf(1.0) == Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(ClaimDistribution::exponential(2.0).pdf(400.0) == Approx(0.0));
    CHECK_THROWS_AS(ClaimDistribution::exponential(1.0).pdf(-0.1), DomainError);
    CHECK(triangle().pdf(0.25) == Approx(1.5).epsilon(1e-12));
    CHECK(triangle().pdf(2.0) == 0.0);
}

TEST_CASE("convolution powers as hybrid functions") {
    const auto e = ClaimDistribution::exponential(1.0);
    const HybridFunction zero = e.convolve_n(0, 1e-3, 10.0);
    REQUIRE(zero.atoms().size() == 1);
    CHECK(zero.atoms()[0].location == 0.0);
    CHECK(zero.atoms()[0].mass == 1.0);
    CHECK_FALSE(zero.has_grid());

    const HybridFunction two = e.convolve_n(2, 1e-3, 40.0);
    CHECK(two.density_at(1.0) == Approx(std::exp(-1.0)).epsilon(1e-9));
    const HybridFunction three = e.convolve_n(3, 1e-3, 60.0);
    CHECK(three.integrate() == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("laplace transform") {
    CHECK(ClaimDistribution::exponential(1.0).laplace(1.0) == Approx(0.5));
    CHECK(ClaimDistribution::erlang(2, 1.0).laplace(1.0) == Approx(0.25));
    const ClaimDistribution laws[] = {ClaimDistribution::exponential(3.0), ClaimDistribution::erlang(4, 2.0),
                                      ClaimDistribution::mixture({0.3, 0.7}, {1.0, 5.0}), triangle()};
    for (const auto& d : laws) CHECK(d.laplace(0.0) == Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(ClaimDistribution::exponential(1.0).laplace(-1.0), DomainError);
    CHECK_THROWS_AS(ClaimDistribution::exponential(1.0).laplace(-1.0 + 1e-10), DomainError);
    CHECK_THROWS_AS(triangle().laplace(-0.5), DomainError);
    const auto t = triangle();
    CHECK(t.laplace(2.0) == Approx(finite([&](double x) { return std::exp(-2.0 * x) * 2.0 * (1.0 - x); }, 0.0, 1.0)).epsilon(1e-10));
}

TEST_CASE("Dickson-Hipp operator on the density") {
    const auto e = ClaimDistribution::exponential(1.0);
    CHECK(e.dickson_hipp_pdf(1.0, 0.0) == Approx(0.5));
    CHECK(e.dickson_hipp_pdf(1.0, 1.0) == Approx(std::exp(-1.0) / 2.0).epsilon(1e-12));
    CHECK(e.dickson_hipp_pdf(1e8, 0.3) < 1e-7);
    const ClaimDistribution laws[] = {e, ClaimDistribution::erlang(3, 2.0), ClaimDistribution::mixture({0.4, 0.6}, {0.5, 2.0}),
                                      triangle()};
    for (const auto& d : laws)
        for (double s : {0.3, 1.0, 2.5}) {
            CHECK(d.dickson_hipp_pdf(s, 0.0) == Approx(d.laplace(s)).epsilon(1e-12));
            for (double x : {0.0, 0.4, 1.7}) {
                auto integrand = [&](double y) { return std::exp(-s * (y - x)) * d.pdf(y); };
                const double direct = d.is_tabulated() ? finite(integrand, std::min(x, 1.0), 1.0) : tail(integrand, x);
                CHECK(d.dickson_hipp_pdf(s, x) == Approx(direct).epsilon(1e-8));
            }
        }
}

TEST_CASE("Dickson-Hipp operator on the survival function") {
    CHECK(ClaimDistribution::exponential(1.0).dickson_hipp_survival(1.0, 0.0) == Approx(0.5));
    CHECK(ClaimDistribution::exponential(2.0).dickson_hipp_survival(2.0, 0.0) == Approx(0.25));
    CHECK(triangle().dickson_hipp_survival(1.0, 1.5) == 0.0);
    const auto d = ClaimDistribution::erlang(2, 1.5);
    for (double x : {0.0, 0.8, 3.0})
        CHECK(d.dickson_hipp_survival(0.7, x) ==
              Approx(tail([&](double y) { return std::exp(-0.7 * (y - x)) * d.survival(y); }, x)).epsilon(1e-9));
}

TEST_CASE("operators commute") {
    const ClaimDistribution laws[] = {ClaimDistribution::mixture({0.25, 0.75}, {0.5, 3.0}), triangle()};
    for (const auto& d : laws)
        for (double s : {0.4, 1.1})
            for (double r : {0.2, 2.0})
                for (double x : {0.0, 0.3, 0.9}) {
                    const double nested = tail([&](double y) { return std::exp(-s * (y - x)) * d.dickson_hipp_pdf(r, y); }, x);
                    const double closed = (d.dickson_hipp_pdf(s, x) - d.dickson_hipp_pdf(r, x)) / (r - s);
                    CHECK(std::abs(nested - closed) < 1e-8);
                }
}

TEST_CASE("distribution function invariants") {
    const ClaimDistribution laws[] = {ClaimDistribution::exponential(0.7), ClaimDistribution::erlang(3, 1.2),
                                      ClaimDistribution::mixture({0.5, 0.5}, {1.0, 4.0}), triangle()};
    for (const auto& d : laws) {
        CHECK(d.cdf(0.0) == Approx(0.0));
        double prev = 0.0;
        for (int i = 0; i <= 200; ++i) {
            const double x = 0.05 * i;
            const double c = d.cdf(x);
            CHECK(c >= prev - 1e-15);
            CHECK(d.survival(x) == Approx(1.0 - c).epsilon(1e-12));
            CHECK(d.pdf(x) >= 0.0);
            prev = c;
        }
        CHECK(d.cdf(1e3) == Approx(1.0));
        const double mean = d.is_tabulated() ? finite([&](double x) { return d.survival(x); }, 0.0, 1.0)
                                             : tail([&](double x) { return d.survival(x); }, 0.0);
        CHECK(d.mean() == Approx(mean).epsilon(1e-8));
    }
}

TEST_CASE("single-component mixture equals the exponential") {
    const auto m = ClaimDistribution::mixture({1.0}, {2.5});
    const auto e = ClaimDistribution::exponential(2.5);
    for (double x : {0.0, 0.1, 1.0, 4.0}) {
        CHECK(m.pdf(x) == Approx(e.pdf(x)));
        CHECK(m.dickson_hipp_pdf(0.6, x) == Approx(e.dickson_hipp_pdf(0.6, x)));
        CHECK(m.dickson_hipp_survival(0.6, x) == Approx(e.dickson_hipp_survival(0.6, x)));
    }
    CHECK(m.laplace(1.3) == Approx(e.laplace(1.3)));
}

TEST_CASE("convolution powers compose") {
    const auto d = triangle();
    const double h = 1e-3;
    const HybridFunction two = d.convolve_n(2, h, 6.0), three = d.convolve_n(3, h, 6.0), five = d.convolve_n(5, h, 6.0);
    const HybridFunction composed = convolve(two, three, 6.0);
    for (double x : {0.5, 1.3, 2.2, 3.1, 4.4}) CHECK(std::abs(composed.density_at(x) - five.density_at(x)) < 1e-5);
    // f^{2*} of the triangle law is piecewise cubic; compare against direct quadrature
    for (double x : {0.3, 0.9, 1.5})
        CHECK(two.density_at(x) ==
              Approx(finite([&](double y) { return d.pdf(y) * d.pdf(x - y); }, std::max(0.0, x - 1.0), std::min(x, 1.0)))
                  .epsilon(1e-5));
}

TEST_CASE("ConvolutionPowers against closed forms") {
    const ConvolutionPowers e(ClaimDistribution::exponential(1.0), 5, 30.0, 1e-3);
    for (int n = 1; n <= 5; ++n) {
        CHECK(e.pdf(n, 2.0) == Approx(erlang_pdf(n, 1.0, 2.0)).epsilon(1e-12));
        CHECK(e.cdf(n, 40.0 - 10.0) == Approx(1.0).epsilon(1e-6));
    }
    CHECK(e.cdf(0, 0.3) == 1.0);
    // two-fold convolution of a two-rate mixture
    const double p = 0.3, a = 1.0, b = 4.0;
    const ConvolutionPowers m(ClaimDistribution::mixture({p, 1.0 - p}, {a, b}), 2, 20.0, 1e-3);
    for (double x : {0.2, 1.0, 3.0}) {
        const double exact = p * p * erlang_pdf(2, a, x) + (1 - p) * (1 - p) * erlang_pdf(2, b, x) +
                             2.0 * p * (1 - p) * a * b / (b - a) * (std::exp(-a * x) - std::exp(-b * x));
        CHECK(m.pdf(2, x) == Approx(exact).epsilon(1e-5));
    }
}

TEST_CASE("tabulated law from CSV") {
    const auto path = std::filesystem::temp_directory_path() / "refract_claims_test.csv";
    {
        std::ofstream f(path);
        f << "x,f\n0,2\n0.5,1\n1,0\n";
    }
    const auto d = ClaimDistribution::load_csv(path);
    CHECK(d.pdf(0.25) == Approx(1.5));
    CHECK(d.mean() == Approx(1.0 / 3.0).epsilon(1e-12));
    {
        std::ofstream f(path);
        f << "0,1\n0.5,1\n0.4,1\n";
    }
    CHECK_THROWS_AS(ClaimDistribution::load_csv(path), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("sampling reproduces the mean") {
    std::mt19937_64 g(7);
    const ClaimDistribution laws[] = {ClaimDistribution::exponential(2.0), ClaimDistribution::erlang(3, 1.5),
                                      ClaimDistribution::mixture({0.2, 0.8}, {0.5, 3.0}), triangle()};
    for (const auto& d : laws) {
        double s = 0.0, s2 = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double x = d.sample(g);
            s += x;
            s2 += x * x;
        }
        const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
        CHECK(std::abs(mean - d.mean()) < 4.0 * se);
    }
}

TEST_CASE("invalid parameters") {
    CHECK_THROWS_AS(ClaimDistribution::exponential(0.0), ConfigError);
    CHECK_THROWS_AS(ClaimDistribution::erlang(0, 1.0), ConfigError);
    CHECK_THROWS_AS(ClaimDistribution::mixture({0.5, 0.4}, {1.0, 2.0}), ConfigError);
    CHECK_THROWS_AS(ClaimDistribution::tabulated(0.1, {1.0}), ConfigError);
}

}
