#include "refract/classical.hpp"
#include "refract/errors.hpp"
#include "refract/simulator.hpp"

#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <vector>

using namespace refract;
using doctest::Approx;

namespace {

RiskModel reference_model() { return {1.0, 1.5, 1.2, 2.0, ClaimDistribution::exponential(1.0)}; }

double tail(const std::function<double(double)>& f) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate(f, 1e-12);
}

double finite(const std::function<double(double)>& f, double a, double b) {
    if (!(b > a)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12);
}

}  // namespace

TEST_SUITE("classical") {

TEST_CASE("g kernel values") {
    const KernelCache k(reference_model(), TimeGrid{1e-3, 10.0}, 5, 5.0);
    const HybridFunction atom = g_kernel(k, 1, 1.0, 0);
    REQUIRE(atom.atoms().size() == 1);
    CHECK(atom.atoms()[0].location == Approx(2.0 / 3.0));
    CHECK(atom.atoms()[0].mass == Approx(std::exp(-2.0 / 3.0)));
    CHECK(g_value(k, 1, 1.0, 1, 1.0) == Approx(std::exp(-1.5)).epsilon(1e-12));
    CHECK(g_value(k, 1, 1.0, 2, 0.5) == 0.0);
    CHECK(g_value(k, 2, 1.0, 3, 1.0 / 1.2 - 1e-9) == 0.0);
    const HybridFunction g1 = g_kernel(k, 1, 1.0, 1);
    CHECK(g1.origin() == Approx(2.0 / 3.0));
    CHECK(g1.density_at(1.0) == Approx(std::exp(-1.5)).epsilon(1e-6));
    CHECK(poisson_weight(2.0, 3, 0.5) == Approx(0.25 * std::exp(-1.0) * 8.0 / 6.0));
    CHECK(poisson_weight(1.0, 2, -1.0) == Approx(-std::exp(1.0) / 2.0));
}

TEST_CASE("b kernel closed cases") {
    const KernelCache k(reference_model(), TimeGrid{1e-2, 1.0}, 4, 30.0);
    CHECK(b_kernel(k, 1, 1.0, 1.0) == Approx(std::exp(-2.0)).epsilon(1e-12));
    for (double y : {0.0, 0.5, 3.0}) CHECK(b_kernel(k, 1, 0.0, y) == Approx(std::exp(-y)));
    CHECK_THROWS_AS(b_kernel(k, 0, 1.0, 1.0), UsageError);
}

TEST_CASE("b kernel represents convolution powers of T_rho f") {
    const ClaimDistribution laws[] = {ClaimDistribution::exponential(1.0), ClaimDistribution::erlang(2, 2.0)};
    for (const auto& d : laws) {
        const RiskModel m{1.0, 1.5, 1.2, 2.0, d};
        const KernelCache k(m, TimeGrid{1e-2, 1.0}, 3, 40.0);
        const double rho = 0.5;
        auto tf = [&](double x) { return d.dickson_hipp_pdf(rho, x); };
        auto tf2 = [&](double u) { return finite([&](double x) { return tf(x) * tf(u - x); }, 0.0, u); };
        auto tf3 = [&](double u) { return finite([&](double x) { return tf(x) * tf2(u - x); }, 0.0, u); };
        for (double u : {0.5, 1.0, 2.0}) {
            const double via1 = tail([&](double y) { return std::exp(-rho * y) * b_kernel(k, 1, u, y); });
            const double via2 = tail([&](double y) { return std::exp(-rho * y) * b_kernel(k, 2, u, y); });
            const double via3 = tail([&](double y) { return std::exp(-rho * y) * b_kernel(k, 3, u, y); });
            CHECK(std::abs(via1 - tf(u)) < 1e-6);
            CHECK(std::abs(via2 - tf2(u)) < 1e-6);
            CHECK(std::abs(via3 - tf3(u)) < 1e-6);
        }
    }
}

TEST_CASE("Lagrange expansion for Erlang claims") {
    const RiskModel m{1.0, 1.6, 1.3, 1.0, ClaimDistribution::erlang(2, 2.0)};
    const TransformParams p{0.4, 0.7};
    const KernelCache k(m, TimeGrid{1e-3, 30.0}, 50, 5.0);
    for (int drift : {1, 2}) {
        const double rho = solve_root(m.lambda, drift == 1 ? m.c1 : m.c2, p, m.claims);
        for (double x : {0.5, 2.0, 5.0}) {
            double sum = 0.0;
            for (int n = 0; n <= 50; ++n) sum += std::pow(p.r, n) * g_kernel(k, drift, x, n).laplace_at(p.delta);
            CHECK(std::abs(sum - std::exp(-rho * x)) < 1e-6);
        }
    }
}

namespace {

void check_r_expansion(const ClaimDistribution& d, const TransformParams& p, const TimeGrid& grid, int terms,
                       std::initializer_list<double> xs) {
    const RiskModel m{1.0, 1.5, 1.2, 2.0, d};
    const KernelCache k(m, grid, terms, 3.0, grid.step);
    for (int drift : {1, 2}) {
        const double rho = solve_root(m.lambda, drift == 1 ? m.c1 : m.c2, p, d);
        for (double x : xs) {
            double f = 0.0, fbar = 0.0;
            for (int n = 0; n < terms; ++n) {
                const double w = std::pow(p.r, n);
                f += w * tf_kernel(k, drift, false, x, n).laplace_at(p.delta);
                fbar += w * tf_kernel(k, drift, true, x, n).laplace_at(p.delta);
            }
            CHECK(std::abs(f - d.dickson_hipp_pdf(rho, x)) < 1e-5);
            CHECK(std::abs(fbar - d.dickson_hipp_survival(rho, x)) < 1e-5);
        }
    }
}

}  // namespace

TEST_CASE("r-expansion of T_rho f and T_rho Fbar") {
    check_r_expansion(ClaimDistribution::exponential(1.0), {0.5, 0.9}, TimeGrid{2e-3, 30.0}, 41, {0.0, 0.7, 2.0});
    // quadrature at every node; a larger delta keeps the horizon short
    check_r_expansion(ClaimDistribution::mixture({0.5, 0.5}, {0.8, 3.0}), {1.0, 0.7}, TimeGrid{2e-3, 16.0}, 30,
                      {0.0, 2.0});
}

TEST_CASE("one-claim density at zero capital") {
    const RiskModel m = reference_model();
    const KernelCache k(m, TimeGrid{1e-3, 10.0}, 4, 5.0);
    const ClassicalDensity w(k);
    CHECK(w.density(0.0, 1).density_at(1.0) == Approx(std::exp(-2.5)).epsilon(1e-12));
    // the recursion's starting point reproduces the direct one-claim formula
    const HybridFunction& z = w.at_zero(1);
    for (double t : {0.0, 0.3, 1.0, 4.0}) CHECK(z.density_at(t) == Approx(std::exp(-t) * std::exp(-1.5 * t)).epsilon(1e-9));
}

TEST_CASE("ruin probability from the joint density") {
    const RiskModel m{1.0, 1.5, 1.5, 0.0, ClaimDistribution::exponential(1.0)};
    // P(N_tau > 40) is 2.5e-3 to 5e-3 at these capitals, so the claim-count sum runs to 80
    const KernelCache k(m, TimeGrid{0.02, 100.0}, 80, 3.0);
    const ClassicalDensity w(k);
    for (double u : {0.0, 1.0, 3.0}) {
        const auto tab = w.table(u);
        double total = 0.0, most_negative = 0.0;
        for (int n = 1; n <= 80; ++n) {
            total += tab[n].integrate();
            for (double v : tab[n].samples()) most_negative = std::min(most_negative, v);
        }
        CHECK(std::abs(total - 2.0 / 3.0 * std::exp(-u / 3.0)) < 1e-3);
        CHECK(most_negative > -1e-10);
    }
}

TEST_CASE("two-claim density against simulation") {
    const RiskModel m{1.0, 1.5, 1.5, 0.0, ClaimDistribution::exponential(1.0)};
    const KernelCache k(m, TimeGrid{1e-3, 2.0}, 3, 3.0);
    const ClassicalDensity w(k);
    const HybridFunction w2 = w.density(1.0, 2);
    const double lo = 0.9, hi = 1.1;
    const double analytic = w2.integrate(lo, hi) / (hi - lo);
    const JointHistogram h = estimate_joint_histogram(m, 1.0, SimConfig{10'000'000, hi, 42, 8192}, {lo, hi}, 2);
    CHECK(std::abs(h.density[1][0] - analytic) < 3.0 * h.std_error[1][0]);
}

TEST_CASE("phi_inf for exponential claims") {
    const RiskModel m{1.0, 1.5, 1.2, 2.0, ClaimDistribution::exponential(1.0)};
    const ClassicalTransform ct(m, {0.0, 1.0}, 1e-3, 60.0);
    CHECK(ct.rho1() == 0.0);
    CHECK(ct.phi_inf(0.0) == Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(ct.phi_inf(1.0) == Approx(2.0 / 3.0 * std::exp(-1.0 / 3.0)).epsilon(1e-6));
    CHECK(ct.phi_inf(60.0) < 1e-8);
    CHECK(ct.contraction() == Approx(2.0 / 3.0));
    CHECK_THROWS_AS(ct.phi_inf(-1.0), DomainError);
}

TEST_CASE("phi_inf initial value and series cross-check") {
    const RiskModel m{1.0, 1.5, 1.2, 2.0, ClaimDistribution::erlang(2, 2.0)};
    const TransformParams p{0.5, 0.9};
    const ClassicalTransform ct(m, p, 1e-3, 5.0);
    CHECK(m.c1 * ct.phi_inf(0.0) == Approx(p.r * m.lambda * m.claims.dickson_hipp_survival(ct.rho1(), 0.0)).epsilon(1e-9));
    for (double u : {0.0, 0.5, 2.0, 4.0}) CHECK(std::abs(ct.phi_inf_series(u) - ct.phi_inf(u)) < 1e-9);
}

TEST_CASE("nu solves its integro-differential equation") {
    const RiskModel m = reference_model();
    const TransformParams p{0.5, 0.9};
    const ClassicalTransform ct(m, p, 1e-3, 5.0);
    CHECK(ct.nu(0.0) == 1.0);
    const double h = ct.step();
    for (double u : {0.5, 1.0, 3.0}) {
        const double deriv = (ct.nu(u + h) - ct.nu(u - h)) / (2 * h);
        const double conv = finite([&](double x) { return ct.nu(u - x) * m.claims.pdf(x); }, 0.0, u);
        const double residual = m.c1 * deriv - (m.lambda + p.delta) * ct.nu(u) + m.lambda * p.r * conv;
        CHECK(std::abs(residual) < 1e-4);
    }
    // with r -> 0 the claims drop out and nu is a pure exponential
    const ClassicalTransform small(m, {0.5, 1e-12}, 1e-3, 3.0);
    CHECK(small.nu(2.0) == Approx(std::exp(1.5 / 1.5 * 2.0)).epsilon(1e-6));
}

TEST_CASE("renewal solver") {
    // g = 1 + int_0^x g  =>  g = e^x
    const double h = 1e-3;
    std::vector<double> ones(1001, 1.0);
    const auto g = solve_renewal(1.0, ones, ones, h);
    CHECK(g.back() == Approx(std::exp(1.0)).epsilon(1e-6));
    CHECK_THROWS_AS(solve_renewal(1.0, std::vector<double>(3, 1.0), ones, h), UsageError);
}

TEST_CASE("grid helpers") {
    const std::vector<double> v{0.0, 1.0, 4.0};
    CHECK(interpolate_grid(v, 0.5, 0.25) == Approx(0.5));
    CHECK(interpolate_grid(v, 0.5, 1.0) == Approx(4.0));
    CHECK_THROWS_AS(interpolate_grid(v, 0.5, 2.0), DomainError);
    const auto e = ClaimDistribution::exponential(2.0);
    CHECK(dickson_hipp_mass(e, 0.0) == 0.5);
    CHECK(dickson_hipp_mass(e, 1.0) == Approx(tail([&](double x) { return e.dickson_hipp_pdf(1.0, x); })));
}

}
