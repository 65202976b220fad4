#include "refract/commands.hpp"

#include "refract/density.hpp"
#include "refract/errors.hpp"
#include "refract/lundberg.hpp"
#include "refract/refracted.hpp"
#include "refract/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#ifndef REFRACT_VERSION
#define REFRACT_VERSION "0.0.0"
#endif

namespace refract {

using nlohmann::json;

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

double phi_u_max(const RunConfig& cfg) {
    double top = cfg.model.b + 1.0;
    for (double u : cfg.u) top = std::max(top, u + 0.5);
    return top;
}

std::vector<int> selected_counts(const RunConfig& cfg) {
    if (!cfg.m.empty()) return cfg.m;
    std::vector<int> all(static_cast<std::size_t>(cfg.grid.n_max));
    for (int n = 1; n <= cfg.grid.n_max; ++n) all[static_cast<std::size_t>(n - 1)] = n;
    return all;
}

}  // namespace

std::string version() { return REFRACT_VERSION; }

std::string csv_preamble(const RunConfig& cfg) {
    return "# refract " + version() + "\n# config " + cfg.to_json().dump() + "\n";
}

json run_echo(const RunConfig& cfg) { return {{"version", version()}, {"config", cfg.to_json()}}; }

json roots_report(const RunConfig& cfg) {
    const LundbergRoots r = solve_pair(cfg.model, cfg.transform);
    json out = run_echo(cfg);
    out["roots"] = {{"rho1", r.rho1}, {"rho2", r.rho2}, {"residual1", r.residual1}, {"residual2", r.residual2}};
    return out;
}

std::string phi_csv(const RunConfig& cfg) {
    std::ostringstream os;
    os << csv_preamble(cfg) << "u,phi,side\n";
    if (cfg.u.empty()) return os.str();
    const RefractedTransform rt(cfg.model, cfg.transform, cfg.grid.phi_step, phi_u_max(cfg));
    const double b = cfg.model.b;
    for (double u : cfg.u) {
        const bool below = u <= b;
        os << num(u) << ',' << num(below ? rt.phi1(u) : rt.phi2(u)) << ',' << (below ? "below" : "above") << '\n';
    }
    os << num(b) << ',' << num(rt.phi1(b)) << ",below\n";
    os << num(b) << ',' << num(rt.phi2(b)) << ",above\n";
    return os.str();
}

std::vector<DensityReport> density_reports(const RunConfig& cfg) {
    std::vector<DensityReport> out;
    if (cfg.u.empty()) return out;
    const DensityOptions opt{cfg.grid.t_max, cfg.grid.time_points, cfg.grid.amount_step, cfg.grid.n_max, 1e-6};
    const DensityEngine engine(cfg.model, opt, cfg.u);
    const RefractedTransform rt(cfg.model, cfg.transform, cfg.grid.phi_step, phi_u_max(cfg));
    const std::vector<int> counts = selected_counts(cfg);
    const DensityGrid& g = engine.grid();

    for (double u : cfg.u) {
        const DensityTable tab = engine.density(u);
        DensityReport rep;
        rep.u = u;

        std::ostringstream os;
        os << csv_preamble(cfg) << "n,t,w\n";
        for (int n : counts) {
            const auto& row = tab.row(n);
            for (std::size_t k = 0; k < row.size(); ++k) os << n << ',' << num(tab.t(k)) << ',' << num(row[k]) << '\n';
        }
        rep.csv = os.str();

        double first_claim_err = 0.0;
        for (std::size_t k = 1; k < tab.size(); ++k)
            first_claim_err = std::max(
                first_claim_err, std::abs(tab.row(1)[k] - DensityEngine::first_claim_density(cfg.model, u, tab.t(k))));

        json masses = json::object();
        for (int n : counts) masses[std::to_string(n)] = tab.mass(n);
        const double series = tab.transform(cfg.transform.delta, cfg.transform.r);
        const double phi = rt.phi(u);

        json s = run_echo(cfg);
        s["u"] = u;
        s["side"] = to_string(tab.side);
        s["grid"] = {{"dt", g.dt}, {"t_max", g.t_max()}, {"amount_step", g.h}, {"n_max", g.n_max}};
        s["total"] = tab.total();
        s["masses"] = masses;
        s["transform"] = {{"delta", cfg.transform.delta},
                          {"r", cfg.transform.r},
                          {"series", series},
                          {"phi", phi},
                          {"residual", std::abs(series - phi)}};
        s["first_claim_max_error"] = first_claim_err;
        s["clamped"] = tab.clamped;
        s["most_negative"] = tab.most_negative;
        rep.summary = std::move(s);
        out.push_back(std::move(rep));
    }
    return out;
}

SimulationReport simulation_report(const RunConfig& cfg) {
    SimulationReport rep;
    std::ostringstream os;
    os << csv_preamble(cfg) << "u,n,t_lo,t_hi,count,density,std_error\n";
    json estimates = json::array();
    const SimConfig hist_cfg{cfg.histogram.paths, cfg.histogram.t_end, cfg.sim.seed, cfg.sim.block_size};
    const auto edges = uniform_edges(cfg.histogram.t_end, cfg.histogram.bins);
    for (double u : cfg.u) {
        const PhiEstimate e = estimate_phi(cfg.model, u, cfg.transform, cfg.sim);
        estimates.push_back({{"u", u},
                             {"phi", e.value},
                             {"std_error", e.std_error},
                             {"horizon_bias", e.horizon_bias},
                             {"ruin_fraction", e.ruin_fraction},
                             {"paths", e.paths}});
        const JointHistogram h = estimate_joint_histogram(cfg.model, u, hist_cfg, edges, cfg.histogram.n_max);
        for (int n = 1; n <= h.n_max; ++n) {
            const auto r = static_cast<std::size_t>(n - 1);
            for (std::size_t b = 0; b + 1 < h.edges.size(); ++b)
                os << num(u) << ',' << n << ',' << num(h.edges[b]) << ',' << num(h.edges[b + 1]) << ','
                   << h.counts[r][b] << ',' << num(h.density[r][b]) << ',' << num(h.std_error[r][b]) << '\n';
        }
    }
    rep.histogram_csv = os.str();
    rep.estimates = run_echo(cfg);
    rep.estimates["estimates"] = std::move(estimates);
    rep.estimates["histogram"] = {{"paths", cfg.histogram.paths}, {"t_end", cfg.histogram.t_end},
                                  {"bins", cfg.histogram.bins}, {"n_max", cfg.histogram.n_max}};
    return rep;
}

}  // namespace refract
