#pragma once

#include "refract/lundberg.hpp"
#include "refract/model.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace refract {

struct SimOutcome {
    bool ruined = false;
    double tau = 0.0;  // meaningful when ruined
    int n_claims = 0;  // claims up to and including the ruinous one, when ruined
    bool horizon_hit = false;
};

/// Paths are split into fixed-size blocks; block k draws from a generator seeded by
/// (seed, k), so results do not depend on how blocks are scheduled.
struct SimConfig {
    std::uint64_t paths = 1'000'000;
    double horizon = 200.0;
    std::uint64_t seed = 42;
    std::uint64_t block_size = 8192;
};

/// Inter-arrival times and claim sizes fed to the path simulator.
class ClaimStream {
public:
    virtual ~ClaimStream() = default;
    virtual double next_interarrival() = 0;
    virtual double next_claim() = 0;
};

class RandomClaimStream final : public ClaimStream {
public:
    RandomClaimStream(const RiskModel& m, std::mt19937_64& rng) : model_(&m), rng_(&rng), wait_(m.lambda) {}
    double next_interarrival() override { return wait_(*rng_); }
    double next_claim() override { return model_->claims.sample(*rng_); }

private:
    const RiskModel* model_;
    std::mt19937_64* rng_;
    std::exponential_distribution<double> wait_;
};

/// Surplus after time w without claims, starting from x (handles the crossing of b).
double drift_forward(const RiskModel& m, double x, double w);

/// Exact event-driven path of the refracted surplus until ruin or the horizon.
SimOutcome simulate_path(const RiskModel& m, double u0, double horizon, ClaimStream& claims);

/// Generator for block k of a run with the given seed.
std::mt19937_64 block_generator(std::uint64_t seed, std::uint64_t block);

struct PhiEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double horizon_bias = 0.0;  // e^{-delta * horizon} bound on the truncated mass
    double ruin_fraction = 0.0;
    std::uint64_t paths = 0;
};

/// Sample mean of r^{N_tau} e^{-delta tau} 1{tau <= horizon}.
PhiEstimate estimate_phi(const RiskModel& m, double u0, const TransformParams& p, const SimConfig& cfg);

struct JointHistogram {
    std::vector<double> edges;                 // time-bin edges
    int n_max = 0;
    std::vector<std::vector<double>> density;  // [n-1][bin], count / (paths * width)
    std::vector<std::vector<double>> std_error;
    std::vector<std::vector<std::uint64_t>> counts;
    std::uint64_t paths = 0;
    std::uint64_t ruined = 0;  // all ruined paths, any n and tau within the horizon
};

/// Histogram of (tau, N_tau) over the given time bins for N_tau <= n_max. Paths run to the
/// last edge.
JointHistogram estimate_joint_histogram(const RiskModel& m, double u0, const SimConfig& cfg,
                                        std::vector<double> edges, int n_max);

/// Uniform bin edges on [0, t_end].
std::vector<double> uniform_edges(double t_end, std::size_t bins);

}  // namespace refract
