#include "refract/validation.hpp"

#include "refract/classical.hpp"
#include "refract/commands.hpp"
#include "refract/density.hpp"
#include "refract/errors.hpp"
#include "refract/lundberg.hpp"
#include "refract/parallel.hpp"
#include "refract/refracted.hpp"
#include "refract/simulator.hpp"

#include "quadrature.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

namespace refract {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Verdict start(int id, std::string name) {
    Verdict v;
    v.id = id;
    v.name = std::move(name);
    return v;
}

double quadratic_root(double lambda, double c, double mu, const TransformParams& p) {
    const double B = c * mu - lambda - p.delta;
    const double C = mu * (lambda + p.delta - lambda * p.r);
    const double disc = std::sqrt(B * B + 4.0 * c * C);
    return B >= 0.0 ? 2.0 * C / (B + disc) : (disc - B) / (2.0 * c);
}

double tail_integral(const std::function<double(double)>& f, double a) {
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate([&](double y) { return f(a + y); }, 1e-13);
}

double finite_integral(const std::function<double(double)>& f, double a, double b) {
    if (!(b > a)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-13);
}

std::vector<double> levels_or_default(const RunConfig& cfg) {
    if (!cfg.u.empty()) return cfg.u;
    return {0.5 * cfg.model.b, cfg.model.b + 1.0};
}

// Shared by the transform and Monte Carlo checks, which use the same tables.
struct Context {
    const RunConfig& cfg;
    std::unique_ptr<DensityEngine> engine;
    double engine_seconds = 0.0;

    const DensityEngine& density() {
        if (!engine) {
            const auto t0 = Clock::now();
            const DensityOptions opt{cfg.grid.t_max, cfg.grid.time_points, cfg.grid.amount_step,
                                     std::max(cfg.grid.n_max, 3), 1e-6};
            engine = std::make_unique<DensityEngine>(cfg.model, opt, levels_or_default(cfg));
            engine_seconds = seconds_since(t0);
        }
        return *engine;
    }
};

Verdict lundberg_sweep() {
    Verdict v = start(1, "Lundberg residuals and exponential closed forms");
    v.limit = 1e-12;
    v.time_limit = 1.0;
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst_residual = 0.0, worst_closed = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double lambda = 0.5 + 1.5 * U(rng);
        const double c2 = 0.5 + 2.5 * U(rng);
        const double c1 = c2 * (1.01 + U(rng));
        const TransformParams p{0.01 + 1.99 * U(rng), 0.01 + 0.99 * U(rng)};
        const double mu = 0.5 + 1.5 * U(rng);
        ClaimDistribution d = ClaimDistribution::exponential(mu);
        switch (i % 3) {
            case 1: d = ClaimDistribution::erlang(2 + i % 4, 2.0 * mu); break;
            case 2: {
                const double w = 0.2 + 0.6 * U(rng);
                d = ClaimDistribution::mixture({w, 1.0 - w}, {mu, 3.0 * mu});
                break;
            }
            default: break;
        }
        for (double c : {c1, c2}) {
            const double rho = solve_root(lambda, c, p, d);
            worst_residual = std::max(worst_residual, std::abs(lundberg_function(lambda, c, p, d, rho)));
            const auto e = ClaimDistribution::exponential(mu);
            const double rho_e = solve_root(lambda, c, p, e);
            worst_closed = std::max(worst_closed, std::abs(rho_e - quadratic_root(lambda, c, mu, p)));
        }
    }
    v.measured = worst_residual;
    v.passed = worst_residual < 1e-12 && worst_closed < 1e-10;
    v.detail = "max residual " + fmt("%.2e", worst_residual) + " (< 1e-12), max closed-form error " +
               fmt("%.2e", worst_closed) + " (< 1e-10) over 50 parameter sets";
    return v;
}

Verdict operator_identity() {
    Verdict v = start(2, "Dickson-Hipp commutativity");
    v.limit = 1e-8;
    v.time_limit = 5.0;
    const double grid_s[] = {0.2, 0.7, 1.3, 2.1, 3.4};
    const ClaimDistribution laws[] = {ClaimDistribution::exponential(1.0), ClaimDistribution::erlang(2, 1.0),
                                      ClaimDistribution::erlang(3, 2.0)};
    double worst = 0.0;
    for (const auto& d : laws)
        for (double s : grid_s)
            for (double r : grid_s) {
                if (s == r) continue;
                for (int ix = 0; ix < 10; ++ix) {
                    const double x = 0.5 * ix;
                    const double nested = tail_integral(
                        [&](double y) { return std::exp(-s * (y - x)) * d.dickson_hipp_pdf(r, y); }, x);
                    const double closed = (d.dickson_hipp_pdf(s, x) - d.dickson_hipp_pdf(r, x)) / (r - s);
                    worst = std::max(worst, std::abs(nested - closed));
                }
            }
    v.measured = worst;
    v.passed = worst < v.limit;
    v.detail = "max residual " + fmt("%.2e", worst) + " on 3 laws x 5x5 (s,r) x 10 points in [0, 4.5]";
    return v;
}

Verdict lagrange_identity(const RunConfig& cfg) {
    Verdict v = start(3, "Lagrange expansion of exp(-rho x)");
    v.limit = 1e-6;
    v.time_limit = 30.0;
    const int terms = 50;
    const KernelCache cache(cfg.model, TimeGrid{1e-3, 30.0}, terms, 5.0);
    const TransformParams& p = cfg.transform;
    double worst = 0.0;
    for (int drift : {1, 2}) {
        const double c = drift == 1 ? cfg.model.c1 : cfg.model.c2;
        const double rho = solve_root(cfg.model.lambda, c, p, cfg.model.claims);
        for (double x : {0.5, 1.0, 2.0, 5.0}) {
            std::vector<double> terms_n(static_cast<std::size_t>(terms) + 1);
            parallel_for(terms_n.size(), [&](std::size_t n) {
                terms_n[n] = std::pow(p.r, static_cast<double>(n)) *
                             g_kernel(cache, drift, x, static_cast<int>(n)).laplace_at(p.delta);
            });
            double sum = 0.0;
            for (double t : terms_n) sum += t;
            worst = std::max(worst, std::abs(std::exp(-rho * x) - sum));
        }
    }
    v.measured = worst;
    v.passed = worst < v.limit;
    v.detail = "max |exp(-rho x) - series| " + fmt("%.2e", worst) + " for x in {0.5,1,2,5}, both drifts";
    return v;
}

Verdict b_identity(const RunConfig& cfg) {
    Verdict v = start(4, "b_n representation of (T_rho f)^{n*}");
    v.limit = 1e-6;
    v.time_limit = 30.0;
    const KernelCache cache(cfg.model, TimeGrid{1e-2, 1.0}, 3, 40.0);
    const ClaimDistribution& d = cfg.model.claims;
    const double rho = solve_root(cfg.model.lambda, cfg.model.c1, cfg.transform, d);
    auto tf = [&](double x) { return d.dickson_hipp_pdf(rho, x); };
    auto tf2 = [&](double u) { return finite_integral([&](double x) { return tf(x) * tf(u - x); }, 0.0, u); };
    auto tf3 = [&](double u) { return finite_integral([&](double x) { return tf(x) * tf2(u - x); }, 0.0, u); };
    double worst = 0.0;
    for (int n = 1; n <= 3; ++n)
        for (double u : {0.5, 1.0, 2.0}) {
            const double nested = n == 1 ? tf(u) : n == 2 ? tf2(u) : tf3(u);
            const double via_b =
                tail_integral([&](double y) { return std::exp(-rho * y) * b_kernel(cache, n, u, y); }, 0.0);
            worst = std::max(worst, std::abs(nested - via_b));
        }
    v.measured = worst;
    v.passed = worst < v.limit;
    v.detail = "max difference " + fmt("%.2e", worst) + " for n in {1,2,3}, u in {0.5,1,2}, rho = " + fmt("%.6f", rho);
    return v;
}

Verdict classical_closed_form() {
    Verdict v = start(5, "Classical ruin probability, exponential claims");
    v.limit = 1e-4;
    v.time_limit = 10.0;
    const RiskModel m{1.0, 1.5, 1.5, 0.0, ClaimDistribution::exponential(1.0)};
    const ClassicalTransform ct(m, TransformParams{0.0, 1.0}, 1e-3, 5.0);
    double worst = 0.0;
    const auto grid = ct.phi_inf_grid();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double u = ct.step() * static_cast<double>(k);
        if (u > 5.0 + 1e-12) break;
        worst = std::max(worst, std::abs(grid[k] - 2.0 / 3.0 * std::exp(-u / 3.0)));
    }
    v.measured = worst;
    v.passed = worst < v.limit;
    v.detail = "max |phi_inf(u) - (2/3)exp(-u/3)| on [0,5]: " + fmt("%.2e", worst);
    return v;
}

Verdict boundary_condition(const RunConfig& cfg) {
    Verdict v = start(6, "Continuity of phi at b");
    v.limit = 1e-3;
    v.time_limit = 60.0;
    const RiskModel& m = cfg.model;
    std::vector<RiskModel> models{m};
    models.push_back(RiskModel{m.lambda, m.c1, 0.5 * (m.c2 + m.c1), 0.75 * m.b + 0.5, m.claims});
    models.push_back(RiskModel{m.lambda, m.c1 * 1.1, m.c2 * 1.05, m.b, ClaimDistribution::erlang(2, 2.0 / m.claims.mean())});
    double gap = 0.0, identity = 0.0;
    std::string extra;
    for (const auto& model : models) {
        model.validate();
        const RefractedTransform rt(model, cfg.transform, cfg.grid.phi_step, model.b + 1.0);
        gap = std::max(gap, rt.boundary_gap());
        identity = std::max(identity, std::abs(rt.boundary_identity_residual()));
    }
    v.measured = gap;
    v.passed = gap < 1e-3 && identity < 1e-4;
    v.detail = "max |phi1(b) - phi2(b+)| " + fmt("%.2e", gap) + ", max residual of c2 phi2(b) identity " +
               fmt("%.2e", identity) + " (< 1e-4), 3 models";
    return v;
}

Verdict ide_residual(const RunConfig& cfg) {
    Verdict v = start(7, "Integro-differential residual");
    v.limit = 1e-3;
    const double b = cfg.model.b;
    const RefractedTransform rt(cfg.model, cfg.transform, cfg.grid.phi_step, b + 6.0);
    const double below = b > 0.2 ? rt.max_ide_residual(1, 0.1, b - 0.1) : 0.0;
    const double above = rt.max_ide_residual(2, b, b + 5.0);
    v.measured = std::max(below, above);
    v.passed = v.measured < v.limit;
    v.detail = "max residual " + fmt("%.2e", below) + " on [0.1, b-0.1], " + fmt("%.2e", above) + " on (b, b+5]";
    return v;
}

Verdict transform_consistency(Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    Verdict v = start(8, "Transform consistency of the joint density");
    v.limit = 1e-2;
    v.time_limit = 300.0;
    const DensityEngine& e = ctx.density();
    std::vector<TransformParams> params{cfg.transform};
    for (double d : {0.25, 0.5, 1.0})
        for (double r : {0.5, 0.9, 1.0}) params.push_back({d, r});
    const auto levels = levels_or_default(cfg);
    double u_max = cfg.model.b + 1.0;
    for (double u : levels) u_max = std::max(u_max, u + 0.5);
    std::vector<DensityTable> tables;
    for (double u : levels) tables.push_back(e.density(u));
    double worst = 0.0, own = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const RefractedTransform rt(cfg.model, params[i], cfg.grid.phi_step, u_max);
        for (std::size_t j = 0; j < levels.size(); ++j) {
            const double diff = std::abs(tables[j].transform(params[i].delta, params[i].r) - rt.phi(levels[j]));
            worst = std::max(worst, diff);
            if (i == 0) own = std::max(own, diff);
        }
    }
    v.measured = worst;
    v.passed = worst < v.limit;
    v.detail = "max |sum r^m L[w](delta) - phi| " + fmt("%.2e", worst) + " over 3x3 (delta,r) grid and configured pair (" +
               fmt("%.2e", own) + "), T = " + fmt("%g", e.grid().t_max()) + ", N = " + std::to_string(e.grid().n_max);
    return v;
}

Verdict monte_carlo(Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    Verdict v = start(9, "Monte Carlo adjudication");
    v.limit = 3.0;
    v.time_limit = 600.0;
    const DensityEngine& e = ctx.density();
    const RiskModel& m = cfg.model;
    const auto levels = levels_or_default(cfg);
    double u_max = m.b + 1.0;
    for (double u : levels) u_max = std::max(u_max, u + 0.5);
    const RefractedTransform rt(m, cfg.transform, cfg.grid.phi_step, u_max);

    // Cells fixed in advance: unit-width bins on [0, 5] for n = 1, 2, 3.
    const std::vector<double> edges{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    const int n_cells = 3;
    const SimConfig phi_cfg = cfg.sim;
    const SimConfig hist_cfg{cfg.histogram.paths, edges.back(), cfg.sim.seed, cfg.sim.block_size};

    double z_phi = 0.0, z_grid = 0.0, z_first = 0.0, z_candidate1 = 0.0, z_candidate2 = 0.0;
    std::size_t cells = 0;
    std::ostringstream phis;
    for (double u : levels) {
        const PhiEstimate pe = estimate_phi(m, u, cfg.transform, phi_cfg);
        const double z = (pe.value - rt.phi(u)) / pe.std_error;
        z_phi = std::max(z_phi, std::abs(z));
        phis << " u=" << u << " z=" << fmt("%.2f", z);

        const DensityTable tab = e.density(u);
        const JointHistogram h = estimate_joint_histogram(m, u, hist_cfg, edges, n_cells);
        for (int n = 1; n <= n_cells; ++n)
            for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
                const auto r = static_cast<std::size_t>(n - 1);
                const double se = h.std_error[r][b];
                if (h.counts[r][b] == 0 || !(se > 0.0)) continue;
                ++cells;
                const double mc = h.density[r][b];
                const double lo = edges[b], hi = edges[b + 1];
                z_grid = std::max(z_grid, std::abs(mc - tab.bin_average(n, lo, hi)) / se);
                if (n != 1) continue;
                auto avg = [&](double (*f)(const RiskModel&, double, double)) {
                    return detail::gauss_panels([&](double t) { return f(m, u, t); }, lo, hi, 0.05) / (hi - lo);
                };
                z_first = std::max(z_first, std::abs(mc - avg(&DensityEngine::first_claim_density)) / se);
                if (u <= m.b) {
                    z_candidate1 = std::max(z_candidate1, std::abs(mc - avg(&DensityEngine::candidate_w1_first)) / se);
                    z_candidate2 = std::max(z_candidate2, std::abs(mc - avg(&DensityEngine::candidate_w1_second)) / se);
                }
            }
    }
    v.measured = std::max({z_phi, z_grid, z_first});
    v.passed = v.measured <= v.limit;
    v.detail = "phi (" + std::to_string(phi_cfg.paths) + " paths):" + phis.str() + "; histogram (" +
               std::to_string(hist_cfg.paths) + " paths, " + std::to_string(cells) + " cells) max |z| " +
               fmt("%.2f", z_grid) + ", first-claim column max |z| " + fmt("%.2f", z_first) +
               "; candidate one-claim closed forms (not gated) max |z| " + fmt("%.1f", z_candidate1) + " and " +
               fmt("%.1f", z_candidate2);
    return v;
}

Verdict degeneracy(const RunConfig& cfg) {
    Verdict v = start(10, "No refraction when c1 = c2");
    v.limit = 1e-3;
    RiskModel m = cfg.model;
    m.c2 = m.c1;
    const double b = m.b;
    const RefractedTransform rt(m, cfg.transform, cfg.grid.phi_step, b + 1.0);
    const ClassicalTransform ct(m, cfg.transform, rt.step(), b + 1.0);
    double phi_diff = 0.0;
    const auto p1 = rt.phi1_grid();
    for (std::size_t k = 0; k < p1.size(); ++k)
        phi_diff = std::max(phi_diff, std::abs(p1[k] - ct.phi_inf(rt.step() * static_cast<double>(k))));

    double u = 0.5 * b;
    for (double x : cfg.u)
        if (x <= b) {
            u = x;
            break;
        }
    const DensityOptions opt{std::min(cfg.grid.t_max, 10.0), 2000, cfg.grid.amount_step, 5, 1e-6};
    const DensityEngine e(m, opt, {u});
    const DensityTable a = e.w1(u), c = e.w_inf(u);
    double w_diff = 0.0;
    for (int n = 1; n <= a.n_max; ++n)
        for (std::size_t k = 0; k < a.size(); ++k) w_diff = std::max(w_diff, std::abs(a.row(n)[k] - c.row(n)[k]));
    v.measured = std::max(phi_diff, w_diff);
    v.passed = v.measured < v.limit;
    v.detail = "max |phi1 - phi_inf| " + fmt("%.2e", phi_diff) + " on [0,b], max |w1 - w_inf| " + fmt("%.2e", w_diff) +
               " at u=" + fmt("%g", u) + ", n<=5";
    return v;
}

Verdict determinism(const RunConfig& cfg, const ValidationOptions& opt) {
    Verdict v = start(11, "Simulation output independent of thread count");
    RunConfig small = cfg;
    small.sim.paths = std::min(small.sim.paths, opt.determinism_paths);
    small.histogram.paths = std::min(small.histogram.paths, opt.determinism_paths);
    if (small.u.empty()) small.u = levels_or_default(cfg);
    const unsigned saved = thread_count();
    set_thread_count(1);
    const SimulationReport one = simulation_report(small);
    set_thread_count(opt.determinism_threads);
    const SimulationReport many = simulation_report(small);
    set_thread_count(saved);
    const bool same = one.histogram_csv == many.histogram_csv && one.estimates.dump() == many.estimates.dump();
    v.measured = same ? 0.0 : 1.0;
    v.passed = same;
    v.detail = std::string(same ? "identical" : "different") + " histogram CSV and estimates JSON at 1 and " +
               std::to_string(opt.determinism_threads) + " threads (" + std::to_string(small.sim.paths) + " paths)";
    return v;
}

Verdict performance(const RunConfig& cfg) {
    Verdict v = start(12, "Density table performance");
    v.time_limit = 60.0;
    const double u = cfg.u.empty() ? 0.5 * cfg.model.b : cfg.u.front();
    const DensityOptions opt{cfg.grid.t_max, 4000, cfg.grid.amount_step, 10, 1e-6};
    const auto t0 = Clock::now();
    const DensityEngine e(cfg.model, opt, {u});
    const DensityTable tab = e.density(u);
    const double s = seconds_since(t0);
    v.measured = s;
    v.limit = 60.0;
    v.passed = s < 60.0 && tab.size() > 0;
    v.detail = "u=" + fmt("%g", u) + ", m<=10, " + std::to_string(tab.size()) + " time points in " + fmt("%.1f", s) +
               " s on " + std::to_string(thread_count()) + " thread(s)";
    return v;
}

}  // namespace

json to_json(const Verdict& v) {
    return {{"id", v.id},         {"name", v.name},       {"passed", v.passed},
            {"measured", v.measured}, {"limit", v.limit}, {"seconds", v.seconds},
            {"time_limit", v.time_limit}, {"detail", v.detail}};
}

std::string format_line(const Verdict& v) {
    char head[64];
    std::snprintf(head, sizeof head, "%s [%2d] ", v.passed ? "PASS" : "FAIL", v.id);
    return head + v.name + ": " + v.detail + " (" + fmt("%.1f", v.seconds) + " s)";
}

std::vector<Verdict> validate(const RunConfig& cfg, const ValidationOptions& opt,
                              const std::function<void(const Verdict&)>& on_verdict) {
    Context ctx{cfg, nullptr};
    const std::vector<std::pair<int, std::function<Verdict()>>> checks{
        {1, [] { return lundberg_sweep(); }},
        {2, [] { return operator_identity(); }},
        {3, [&] { return lagrange_identity(cfg); }},
        {4, [&] { return b_identity(cfg); }},
        {5, [] { return classical_closed_form(); }},
        {6, [&] { return boundary_condition(cfg); }},
        {7, [&] { return ide_residual(cfg); }},
        {8, [&] { return transform_consistency(ctx); }},
        {9, [&] { return monte_carlo(ctx); }},
        {10, [&] { return degeneracy(cfg); }},
        {11, [&] { return determinism(cfg, opt); }},
        {12, [&] { return performance(cfg); }},
    };
    std::vector<Verdict> out;
    for (const auto& [id, run] : checks) {
        if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), id) == opt.only.end()) continue;
        const auto t0 = Clock::now();
        const double engine_before = ctx.engine_seconds;
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& ex) {
            v.id = id;
            v.name = "check " + std::to_string(id);
            v.passed = false;
            v.measured = std::numeric_limits<double>::quiet_NaN();
            v.detail = std::string("error: ") + ex.what();
        }
        v.seconds = seconds_since(t0);
        if (ctx.engine_seconds != engine_before) v.detail += "; density tables built in " + fmt("%.1f", ctx.engine_seconds) + " s";
        if (v.time_limit > 0.0 && v.seconds >= v.time_limit) {
            v.passed = false;
            v.detail += "; exceeded time limit " + fmt("%g", v.time_limit) + " s";
        }
        if (on_verdict) on_verdict(v);
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace refract
