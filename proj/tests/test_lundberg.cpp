#include "refract/errors.hpp"
#include "refract/lundberg.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace refract;
using doctest::Approx;

TEST_SUITE("lundberg") {

TEST_CASE("exponential claims reduce to a quadratic") {
    const auto e = ClaimDistribution::exponential(1.0);
    CHECK(solve_root(1.0, 1.5, {0.5, 1.0}, e) == Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(solve_root(1.0, 1.5, {0.0, 1.0}, e) == 0.0);
    CHECK(solve_root(1.0, 1.5, {0.5, 0.5}, e) == Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("pair for the reference rates") {
    const RiskModel m{1.0, 1.5, 1.2, 2.0, ClaimDistribution::exponential(1.0)};
    const LundbergRoots r = solve_pair(m, {0.5, 1.0});
    CHECK(r.rho1 == Approx(0.577350269).epsilon(1e-9));
    // 1.2 s^2 + 0.7 s... : c s^2 + (c - 1.5) s - 0.5 = 0 with c = 1.2
    CHECK(r.rho2 == Approx((0.3 + std::sqrt(0.09 + 2.4)) / 2.4).epsilon(1e-12));
    CHECK(std::abs(r.residual1) < 1e-12);
    CHECK(std::abs(r.residual2) < 1e-12);

    const RiskModel same{1.0, 1.5, 1.5, 2.0, ClaimDistribution::exponential(1.0)};
    const LundbergRoots s = solve_pair(same, {0.5, 0.9});
    CHECK(s.rho1 == s.rho2);
    const LundbergRoots z = solve_pair(m, {0.0, 1.0});
    CHECK(z.rho1 == 0.0);
    CHECK(z.rho2 == 0.0);
}

TEST_CASE("randomised residual sweep") {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double lambda = 0.5 + 1.5 * U(g), c2 = 0.3 + 3.0 * U(g), c1 = c2 * (1.0 + U(g));
        const TransformParams p{1e-3 + 2.0 * U(g), 1e-3 + (1.0 - 1e-3) * U(g)};
        const ClaimDistribution d = i % 2 ? ClaimDistribution::erlang(1 + i % 5, 0.5 + U(g))
                                          : ClaimDistribution::mixture({0.6, 0.4}, {0.5 + U(g), 4.0});
        for (double c : {c1, c2}) {
            const double rho = solve_root(lambda, c, p, d);
            CHECK(rho > 0.0);
            CHECK(std::abs(lundberg_function(lambda, c, p, d, rho)) < 1e-12);
        }
    }
}

TEST_CASE("root increases with delta") {
    const auto d = ClaimDistribution::erlang(2, 2.0);
    double prev = -1.0;
    for (int i = 1; i <= 40; ++i) {
        const double rho = solve_root(1.0, 1.3, {0.05 * i, 0.8}, d);
        CHECK(rho > prev);
        prev = rho;
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS((TransformParams{-0.1, 0.5}.validate()), ConfigError);
    CHECK_THROWS_AS((TransformParams{0.1, 0.0}.validate()), ConfigError);
    CHECK_THROWS_AS((TransformParams{0.1, 1.5}.validate()), ConfigError);
    CHECK_NOTHROW((TransformParams{0.0, 1.0}.validate()));
    CHECK_THROWS_AS(solve_root(0.0, 1.0, {0.1, 1.0}, ClaimDistribution::exponential(1.0)), UsageError);
}

}
