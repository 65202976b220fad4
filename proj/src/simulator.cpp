#include "refract/simulator.hpp"

#include "refract/errors.hpp"
#include "refract/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace refract {

double drift_forward(const RiskModel& m, double x, double w) {
    if (x >= m.b) return x + m.c2 * w;
    const double reach = (m.b - x) / m.c1;
    return w <= reach ? x + m.c1 * w : m.b + m.c2 * (w - reach);
}

SimOutcome simulate_path(const RiskModel& m, double u0, double horizon, ClaimStream& claims) {
    SimOutcome out;
    double x = u0;
    double t = 0.0;
    int n = 0;
    for (;;) {
        const double w = claims.next_interarrival();
        if (t + w > horizon) {
            out.horizon_hit = true;
            return out;
        }
        x = drift_forward(m, x, w);
        t += w;
        ++n;
        x -= claims.next_claim();
        if (x < 0.0) {
            out.ruined = true;
            out.tau = t;
            out.n_claims = n;
            return out;
        }
    }
}

std::mt19937_64 block_generator(std::uint64_t seed, std::uint64_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
    return std::mt19937_64(seq);
}

namespace {

template <class Body>
void for_each_block(const SimConfig& cfg, Body&& body) {
    if (cfg.paths == 0 || cfg.block_size == 0) throw UsageError("simulation needs paths and block_size > 0");
    const std::uint64_t blocks = (cfg.paths + cfg.block_size - 1) / cfg.block_size;
    parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t k) {
        const std::uint64_t first = k * cfg.block_size;
        const std::uint64_t count = std::min(cfg.block_size, cfg.paths - first);
        std::mt19937_64 rng = block_generator(cfg.seed, k);
        body(k, count, rng);
    });
}

void check_common(const RiskModel& m, double u0, const SimConfig& cfg) {
    m.validate();
    if (u0 < 0.0) throw DomainError("initial capital must be nonnegative");
    if (!(cfg.horizon > 0.0)) throw ConfigError("simulation horizon must be positive");
}

}  // namespace

PhiEstimate estimate_phi(const RiskModel& m, double u0, const TransformParams& p, const SimConfig& cfg) {
    check_common(m, u0, cfg);
    p.validate();
    const std::uint64_t blocks = (cfg.paths + cfg.block_size - 1) / std::max<std::uint64_t>(cfg.block_size, 1);
    std::vector<double> sum(blocks, 0.0), sum2(blocks, 0.0);
    std::vector<std::uint64_t> ruined(blocks, 0);
    for_each_block(cfg, [&](std::size_t k, std::uint64_t count, std::mt19937_64& rng) {
        RandomClaimStream stream(m, rng);
        double s = 0.0, s2 = 0.0;
        std::uint64_t r = 0;
        for (std::uint64_t i = 0; i < count; ++i) {
            const SimOutcome o = simulate_path(m, u0, cfg.horizon, stream);
            if (!o.ruined) continue;
            ++r;
            const double v = std::pow(p.r, o.n_claims) * std::exp(-p.delta * o.tau);
            s += v;
            s2 += v * v;
        }
        sum[k] = s;
        sum2[k] = s2;
        ruined[k] = r;
    });
    double s = 0.0, s2 = 0.0;
    std::uint64_t r = 0;
    for (std::size_t k = 0; k < blocks; ++k) {
        s += sum[k];
        s2 += sum2[k];
        r += ruined[k];
    }
    const double n = static_cast<double>(cfg.paths);
    PhiEstimate e;
    e.paths = cfg.paths;
    e.value = s / n;
    const double var = std::max(0.0, s2 / n - e.value * e.value) * n / std::max(1.0, n - 1.0);
    e.std_error = std::sqrt(var / n);
    e.horizon_bias = std::exp(-p.delta * cfg.horizon);
    e.ruin_fraction = static_cast<double>(r) / n;
    return e;
}

std::vector<double> uniform_edges(double t_end, std::size_t bins) {
    if (!(t_end > 0.0) || bins == 0) throw UsageError("uniform_edges: need t_end > 0 and bins > 0");
    std::vector<double> e(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) e[i] = t_end * static_cast<double>(i) / static_cast<double>(bins);
    return e;
}

JointHistogram estimate_joint_histogram(const RiskModel& m, double u0, const SimConfig& cfg,
                                        std::vector<double> edges, int n_max) {
    check_common(m, u0, cfg);
    if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()) || edges.front() < 0.0)
        throw UsageError("histogram edges must be sorted, nonnegative and at least two");
    if (n_max < 1) throw UsageError("histogram needs n_max >= 1");
    const std::size_t bins = edges.size() - 1;
    const double t_end = edges.back();
    const std::uint64_t blocks = (cfg.paths + cfg.block_size - 1) / std::max<std::uint64_t>(cfg.block_size, 1);
    const std::size_t cells = static_cast<std::size_t>(n_max) * bins;
    std::vector<std::vector<std::uint64_t>> partial(blocks);
    std::vector<std::uint64_t> ruined(blocks, 0);
    for_each_block(cfg, [&](std::size_t k, std::uint64_t count, std::mt19937_64& rng) {
        RandomClaimStream stream(m, rng);
        std::vector<std::uint64_t> c(cells, 0);
        std::uint64_t r = 0;
        for (std::uint64_t i = 0; i < count; ++i) {
            const SimOutcome o = simulate_path(m, u0, t_end, stream);
            if (!o.ruined) continue;
            ++r;
            if (o.n_claims > n_max || o.tau < edges.front()) continue;
            auto it = std::upper_bound(edges.begin(), edges.end(), o.tau);
            const auto bin = static_cast<std::size_t>(it - edges.begin()) - 1;
            if (bin >= bins) continue;
            ++c[static_cast<std::size_t>(o.n_claims - 1) * bins + bin];
        }
        partial[k] = std::move(c);
        ruined[k] = r;
    });
    JointHistogram h;
    h.edges = std::move(edges);
    h.n_max = n_max;
    h.paths = cfg.paths;
    h.counts.assign(static_cast<std::size_t>(n_max), std::vector<std::uint64_t>(bins, 0));
    for (std::size_t k = 0; k < blocks; ++k) {
        h.ruined += ruined[k];
        for (std::size_t c = 0; c < cells; ++c) h.counts[c / bins][c % bins] += partial[k][c];
    }
    const double n = static_cast<double>(cfg.paths);
    h.density.assign(static_cast<std::size_t>(n_max), std::vector<double>(bins));
    h.std_error.assign(static_cast<std::size_t>(n_max), std::vector<double>(bins));
    for (std::size_t r = 0; r < h.counts.size(); ++r)
        for (std::size_t b = 0; b < bins; ++b) {
            const double width = h.edges[b + 1] - h.edges[b];
            const double p = static_cast<double>(h.counts[r][b]) / n;
            h.density[r][b] = p / width;
            h.std_error[r][b] = std::sqrt(p * (1.0 - p) / n) / width;
        }
    return h;
}

}  // namespace refract
