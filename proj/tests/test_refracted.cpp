#include "refract/errors.hpp"
#include "refract/refracted.hpp"
#include "refract/simulator.hpp"

#include <doctest.h>

#include <cmath>

using namespace refract;
using doctest::Approx;

namespace {

RiskModel reference_model() { return {1.0, 1.5, 1.2, 2.0, ClaimDistribution::exponential(1.0)}; }

// For Exp(beta) claims applying (d/du + beta) to the equation with premium c gives
// c phi'' + (c beta - lambda - delta) phi' - beta (lambda + delta - lambda r) phi = 0.
std::pair<double, double> exp_claim_roots(const RiskModel& m, double c, const TransformParams& p, double beta) {
    const double a = c;
    const double bb = c * beta - m.lambda - p.delta;
    const double cc = -beta * (m.lambda + p.delta - m.lambda * p.r);
    const double d = std::sqrt(bb * bb - 4.0 * a * cc);
    return {(-bb - d) / (2.0 * a), (-bb + d) / (2.0 * a)};
}

}  // namespace

TEST_SUITE("refracted") {

TEST_CASE("phi2 decays exponentially above b for exponential claims") {
    const RiskModel m = reference_model();
    const TransformParams p{0.5, 0.9};
    const RefractedTransform rt(m, p, 1e-3, 8.0);
    const double s = exp_claim_roots(m, m.c2, p, 1.0).first;
    CHECK(s == Approx(-0.5930703308).epsilon(1e-9));
    const double base = rt.phi2(m.b + 0.5);
    for (double u : {3.0, 4.0, 5.5, 7.5})
        CHECK(std::abs(rt.phi2(u) / base - std::exp(s * (u - m.b - 0.5))) < 1e-5);
}

TEST_CASE("phi1 is a two-exponential combination below b for exponential claims") {
    const RiskModel m = reference_model();
    const TransformParams p{0.5, 0.9};
    const RefractedTransform rt(m, p, 1e-3, 4.0);
    const auto [s1, s2] = exp_claim_roots(m, m.c1, p, 1.0);
    // fit on two points, predict the rest
    const double x0 = 0.25, x1 = 1.75;
    const double det = std::exp(s1 * x0 + s2 * x1) - std::exp(s2 * x0 + s1 * x1);
    const double A = (rt.phi1(x0) * std::exp(s2 * x1) - rt.phi1(x1) * std::exp(s2 * x0)) / det;
    const double B = (rt.phi1(x1) * std::exp(s1 * x0) - rt.phi1(x0) * std::exp(s1 * x1)) / det;
    for (double u : {0.0, 0.6, 1.0, 1.4, 2.0})
        CHECK(std::abs(rt.phi1(u) - (A * std::exp(s1 * u) + B * std::exp(s2 * u))) < 1e-5);
}

TEST_CASE("phi1 approaches phi_inf for a distant threshold") {
    RiskModel m = reference_model();
    m.b = 50.0;
    const RefractedTransform rt(m, {0.5, 0.9}, 5e-3, 51.0);
    for (double u : {0.0, 1.0, 3.0}) CHECK(std::abs(rt.phi1(u) - rt.classical().phi_inf(u)) < 1e-4);
}

TEST_CASE("equal premium rates reduce to the classical transform") {
    RiskModel m = reference_model();
    m.c2 = m.c1;
    const RefractedTransform rt(m, {0.5, 0.9}, 1e-3, 5.0);
    const ClassicalTransform ct(m, {0.5, 0.9}, 1e-3, 5.0);
    for (double u : {0.0, 1.0, 2.0, 3.0, 4.5}) CHECK(std::abs(rt.phi(u) - ct.phi_inf(u)) < 1e-6);
    CHECK(rt.rho2() == Approx(rt.rho1()));
}

TEST_CASE("chi in limiting cases") {
    RiskModel m = reference_model();
    SUBCASE("r -> 0 leaves nu(b) of a claim-free path") {
        const RefractedTransform rt(m, {0.5, 1e-9}, 1e-3, 3.0);
        // with r = 0 nu solves c1 nu' = (lambda + delta) nu, nu(0) = 1
        CHECK(rt.chi() == Approx(std::exp((m.lambda + 0.5) / m.c1 * m.b)).epsilon(1e-6));
    }
    SUBCASE("b = 0") {
        m.b = 0.0;
        const RefractedTransform rt(m, {0.5, 0.9}, 1e-3, 3.0);
        CHECK(rt.chi() == Approx(1.0).epsilon(1e-12));
        CHECK(rt.phi(0.0) == Approx(rt.phi2(0.0)));
    }
}

TEST_CASE("boundary continuity and integral identity") {
    const RiskModel m = reference_model();
    const RefractedTransform rt(m, {0.5, 0.9}, 1e-3, 4.0);
    CHECK(rt.boundary_gap() < 1e-3);
    CHECK(std::abs(rt.boundary_identity_residual()) < 1e-4);
}

TEST_CASE("integro-differential equation residual") {
    const RiskModel laws[] = {reference_model(),
                              {1.0, 1.6, 1.3, 1.5, ClaimDistribution::erlang(2, 2.0)},
                              {1.0, 1.8, 1.4, 1.0, ClaimDistribution::mixture({0.7, 0.3}, {2.0, 0.5})}};
    for (const auto& m : laws) {
        const RefractedTransform rt(m, {0.5, 0.9}, 1e-3, m.b + 5.0);
        CHECK(rt.max_ide_residual(1, 0.1, m.b - 0.1) < 1e-3);
        CHECK(rt.max_ide_residual(2, m.b + 1e-3, m.b + 5.0) < 1e-3);
    }
}

TEST_CASE("phi is decreasing in the initial capital and vanishes far above b") {
    const RiskModel m = reference_model();
    const RefractedTransform rt(m, {0.5, 0.9}, 1e-3, 30.0);
    double prev = rt.phi(0.0);
    for (double u = 0.05; u <= 30.0; u += 0.05) {
        const double v = rt.phi(u);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
    CHECK(rt.phi2(30.0) < 1e-6);
    CHECK(rt.phi1(0.0) < 1.0);
}

TEST_CASE("phi against simulation") {
    const RiskModel m = reference_model();
    const TransformParams p{0.5, 0.9};
    const RefractedTransform rt(m, p, 1e-3, 4.0);
    const SimConfig sim{200'000, 60.0, 11, 8192};
    for (double u : {1.0, 3.0}) {
        const PhiEstimate e = estimate_phi(m, u, p, sim);
        CHECK(std::abs(e.value - rt.phi(u)) < 4.0 * e.std_error + e.horizon_bias);
    }
}

TEST_CASE("invalid inputs") {
    const RiskModel m = reference_model();
    CHECK_THROWS_AS(RefractedTransform(m, {-0.5, 0.9}, 1e-3, 4.0), ConfigError);
    RiskModel bad = m;
    bad.c2 = 0.9;
    CHECK_THROWS_AS(RefractedTransform(bad, {0.5, 0.9}, 1e-3, 4.0), ConfigError);
    CHECK(aligned_amount_step(2.0, 3e-3) <= 3e-3);
    const double h = aligned_amount_step(2.0, 3e-3);
    CHECK(std::abs(2.0 / h - std::round(2.0 / h)) < 1e-9);
}

}  // TEST_SUITE
