#include "refract/density.hpp"
#include "refract/errors.hpp"
#include "refract/parallel.hpp"
#include "refract/simulator.hpp"

#include <doctest.h>

#include <cmath>
#include <deque>
#include <limits>

using namespace refract;
using doctest::Approx;

namespace {

RiskModel reference_model() { return {1.0, 1.5, 1.2, 2.0, ClaimDistribution::exponential(1.0)}; }

class ScriptedStream final : public ClaimStream {
public:
    ScriptedStream(std::deque<double> waits, std::deque<double> sizes) : waits_(std::move(waits)), sizes_(std::move(sizes)) {}
    double next_interarrival() override { return pop(waits_); }
    double next_claim() override { return pop(sizes_); }

private:
    static double pop(std::deque<double>& q) {
        if (q.empty()) return std::numeric_limits<double>::infinity();
        const double v = q.front();
        q.pop_front();
        return v;
    }
    std::deque<double> waits_;
    std::deque<double> sizes_;
};

struct ThreadGuard {
    unsigned saved = thread_count();
    ~ThreadGuard() { set_thread_count(saved); }
};

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("drift crosses the threshold at the slower rate") {
    const RiskModel m = reference_model();
    CHECK(drift_forward(m, 1.0, 0.5) == Approx(1.75).epsilon(1e-15));
    CHECK(drift_forward(m, 1.0, 1.0) == Approx(2.4).epsilon(1e-15));
    CHECK(drift_forward(m, 3.0, 1.0) == Approx(4.2).epsilon(1e-15));
    CHECK(drift_forward(m, 2.0, 0.5) == Approx(2.6).epsilon(1e-15));
}

TEST_CASE("scripted paths are exact") {
    const RiskModel m = reference_model();
    SUBCASE("ruin at the second claim after crossing b") {
        // 1 -> 1.75 -> 0.75; then 0.8333 up to b and 0.1667 at c2 -> 2.2 -> -0.8
        ScriptedStream s({0.5, 1.0}, {1.0, 3.0});
        const SimOutcome o = simulate_path(m, 1.0, 100.0, s);
        CHECK(o.ruined);
        CHECK(o.n_claims == 2);
        CHECK(std::abs(o.tau - 1.5) < 1e-12);
    }
    SUBCASE("ruin at the first claim") {
        ScriptedStream s({0.2}, {5.0});
        const SimOutcome o = simulate_path(m, 3.0, 100.0, s);
        CHECK(o.ruined);
        CHECK(o.n_claims == 1);
        CHECK(o.tau == Approx(0.2).epsilon(1e-15));
    }
    SUBCASE("a claim that leaves exactly zero does not ruin") {
        ScriptedStream s({0.5, 50.0}, {drift_forward(m, 3.0, 0.5)});
        const SimOutcome o = simulate_path(m, 3.0, 10.0, s);
        CHECK_FALSE(o.ruined);
        CHECK(o.horizon_hit);
    }
    SUBCASE("no claims before the horizon") {
        ScriptedStream s({}, {});
        const SimOutcome o = simulate_path(m, 0.0, 10.0, s);
        CHECK_FALSE(o.ruined);
        CHECK(o.horizon_hit);
    }
}

TEST_CASE("results do not depend on the thread count") {
    ThreadGuard guard;
    const RiskModel m = reference_model();
    const SimConfig cfg{50'000, 50.0, 7, 4096};
    const TransformParams p{0.5, 0.9};
    const auto edges = uniform_edges(5.0, 5);
    set_thread_count(1);
    const PhiEstimate a = estimate_phi(m, 1.0, p, cfg);
    const JointHistogram ha = estimate_joint_histogram(m, 1.0, cfg, edges, 3);
    set_thread_count(4);
    const PhiEstimate b = estimate_phi(m, 1.0, p, cfg);
    const JointHistogram hb = estimate_joint_histogram(m, 1.0, cfg, edges, 3);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
    CHECK(ha.counts == hb.counts);
    CHECK(ha.ruined == hb.ruined);
}

TEST_CASE("different seeds give different streams") {
    auto g1 = block_generator(42, 0);
    auto g2 = block_generator(42, 1);
    auto g3 = block_generator(43, 0);
    const auto x1 = g1(), x2 = g2(), x3 = g3();
    CHECK(x1 != x2);
    CHECK(x1 != x3);
    auto again = block_generator(42, 0);
    CHECK(again() == x1);
}

TEST_CASE("ruin frequency matches the integrated density") {
    const RiskModel m = reference_model();
    const DensityEngine e(m, DensityOptions{20.0, 2000, 0.1, 8, 1e-6}, {1.0});
    const JointHistogram h = estimate_joint_histogram(m, 1.0, SimConfig{10'000, 20.0, 42, 8192}, {0.0, 20.0}, 8);
    double freq = 0.0;
    for (int n = 1; n <= 8; ++n) freq += static_cast<double>(h.counts[static_cast<std::size_t>(n - 1)][0]);
    freq /= static_cast<double>(h.paths);
    const double model = e.density(1.0).total();
    const double se = std::sqrt(model * (1.0 - model) / static_cast<double>(h.paths));
    CHECK(std::abs(freq - model) < 3.0 * se);
}

TEST_CASE("histogram mass is a probability") {
    const RiskModel m = reference_model();
    const JointHistogram h = estimate_joint_histogram(m, 0.0, SimConfig{20'000, 10.0, 3, 8192}, uniform_edges(10.0, 20), 4);
    double mass = 0.0;
    std::uint64_t counted = 0;
    for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t b = 0; b < 20; ++b) {
            mass += h.density[n][b] * 0.5;
            counted += h.counts[n][b];
        }
    CHECK(mass <= 1.0);
    CHECK(counted <= h.ruined);
    CHECK(h.ruined <= h.paths);
}

TEST_CASE("strong discounting drives the estimate to zero") {
    const PhiEstimate e = estimate_phi(reference_model(), 3.0, {50.0, 0.9}, SimConfig{20'000, 50.0, 1, 8192});
    // ruin needs at least one claim: phi <= r E[e^{-delta T1}] = r lambda / (lambda + delta)
    CHECK(e.value < 0.9 / 51.0);
    CHECK(e.value < 2e-3);
    CHECK(e.ruin_fraction > 0.0);
    CHECK(e.horizon_bias < 1e-300);
}

TEST_CASE("net profit condition is enforced") {
    RiskModel m = reference_model();
    m.c2 = 0.95;
    try {
        estimate_phi(m, 1.0, {0.5, 0.9}, SimConfig{});
        FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("net profit") != std::string::npos);
    }
    CHECK_THROWS_AS(estimate_phi(reference_model(), -1.0, {0.5, 0.9}, SimConfig{}), DomainError);
    CHECK_THROWS_AS(estimate_joint_histogram(reference_model(), 1.0, SimConfig{}, {1.0}, 2), UsageError);
}

TEST_CASE("uniform edges") {
    const auto e = uniform_edges(5.0, 5);
    REQUIRE(e.size() == 6);
    CHECK(e.front() == 0.0);
    CHECK(e[3] == Approx(3.0));
    CHECK(e.back() == 5.0);
    CHECK_THROWS_AS(uniform_edges(0.0, 5), UsageError);
}

}  // TEST_SUITE
