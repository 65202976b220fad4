#include "refract/density.hpp"

#include "refract/errors.hpp"
#include "refract/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace refract {

namespace {

using Vec = std::vector<double>;
using Table = std::vector<std::vector<Vec>>;  // [node][order] lattice functions
using SpecTable = std::vector<std::vector<fft::Spectrum>>;

std::size_t idx(long i) { return static_cast<std::size_t>(i); }

}  // namespace

std::string to_string(Side s) { return s == Side::below ? "below" : "above"; }

// ---------------------------------------------------------------------------------------------
// DensityTable

const std::vector<double>& DensityTable::row(int n) const {
    if (n < 1 || n > n_max) throw UsageError("DensityTable: claim count out of range");
    return rows[static_cast<std::size_t>(n) - 1];
}

double DensityTable::value(int n, double t) const {
    const auto& r = row(n);
    if (t < 0.0 || r.empty()) return 0.0;
    const double pos = t / step;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= r.size()) return i + 1 == r.size() && pos - i < 1e-9 ? r.back() : 0.0;
    const double w = pos - static_cast<double>(i);
    return r[i] + w * (r[i + 1] - r[i]);
}

double DensityTable::bin_average(int n, double lo, double hi) const {
    if (!(hi > lo)) throw UsageError("bin_average: empty bin");
    // exact integral of the piecewise-linear interpolant
    const auto& r = row(n);
    auto prim = [&](double x) {
        if (x <= 0.0) return 0.0;
        const double end = step * static_cast<double>(r.size() - 1);
        x = std::min(x, end);
        const double pos = x / step;
        auto i = static_cast<std::size_t>(pos);
        if (i >= r.size() - 1) i = r.size() - 2;
        double s = 0.0;
        for (std::size_t k = 0; k < i; ++k) s += 0.5 * step * (r[k] + r[k + 1]);
        const double w = pos - static_cast<double>(i);
        const double vx = r[i] + w * (r[i + 1] - r[i]);
        return s + 0.5 * w * step * (r[i] + vx);
    };
    return (prim(hi) - prim(lo)) / (hi - lo);
}

double DensityTable::mass(int n) const {
    const auto& r = row(n);
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < r.size(); ++k) s += 0.5 * step * (r[k] + r[k + 1]);
    return s;
}

double DensityTable::total() const {
    double s = 0.0;
    for (int n = 1; n <= n_max; ++n) s += mass(n);
    return s;
}

double DensityTable::transform(double delta, double r) const {
    double s = 0.0;
    double rn = 1.0;
    for (int n = 1; n <= n_max; ++n) {
        rn *= r;
        const auto& w = row(n);
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < w.size(); ++k)
            acc += 0.5 * step * (w[k] * std::exp(-delta * t(k)) + w[k + 1] * std::exp(-delta * t(k + 1)));
        s += rn * acc;
    }
    return s;
}

HybridFunction DensityTable::column(int n) const { return HybridFunction::from_samples(Domain::time, 0.0, step, row(n)); }

void DensityTable::write_csv(std::ostream& os) const {
    os << "n,t,w\n";
    os.precision(12);
    for (int n = 1; n <= n_max; ++n) {
        const auto& r = row(n);
        for (std::size_t k = 0; k < r.size(); ++k) os << n << ',' << t(k) << ',' << r[k] << '\n';
    }
}

// ---------------------------------------------------------------------------------------------
// Engine

struct DensityEngine::Impl {
    Impl(const RiskModel& model, DensityOptions o) : m(model), opt(o) {}

    RiskModel m;
    DensityOptions opt;
    DensityGrid g{};
    std::unique_ptr<KernelCache> kc;
    int N = 0;

    Table tf1;     // [i][k], x_i = i h, i <= J
    Table tf2;     // [i][m], i <= J + Y
    Table tf2bar;  // [i][n], i <= J + Y
    std::vector<Vec> winf0;
    Table winf;   // [j][n], j <= J + Y
    Table varpi;  // [j][n], j <= J, n >= 1
    std::vector<Vec> chi, gam, kfun;
    Table w1;    // [j][n], j <= J
    Table eps;   // [i][n], i <= Y, n = 0..N-1
    Table phi2;  // [i][n], i <= Y

    // lattice helpers --------------------------------------------------------------------------
    double t_of(std::size_t gi) const { return g.dt * (static_cast<double>(gi) - static_cast<double>(g.k0)); }
    long shift_of(int nodes) const { return static_cast<long>(nodes) * g.q; }

    template <class F>
    Vec sample(long start, F&& f) const {
        Vec out(g.len, 0.0);
        for (long gi = std::max(0L, start); gi < static_cast<long>(g.len); ++gi) out[idx(gi)] = f(t_of(idx(gi)));
        if (start >= 0 && start < static_cast<long>(g.len)) out[idx(start)] *= 0.5;
        return out;
    }

    void add_shifted(Vec& out, const Vec& in, long shift, double factor) const {
        const long n = static_cast<long>(g.len);
        for (long gi = 0; gi < n; ++gi) {
            const long s = gi + shift;
            if (s >= 0 && s < n) out[idx(gi)] += factor * in[idx(s)];
        }
    }

    fft::Spectrum spec(const Vec& v) const { return fft::Spectrum(v, g.fft_size); }

    void add_result(Vec& out, const fft::ProductAccumulator& acc) const {
        if (acc.empty()) return;
        const Vec r = acc.result(g.len + idx(g.k0));
        for (std::size_t gi = 0; gi < g.len; ++gi) out[gi] += g.dt * r[gi + idx(g.k0)];
    }

    Vec convolve(const Vec& a, const Vec& b) const {
        fft::ProductAccumulator acc(g.fft_size);
        acc.add(spec(a), spec(b), 1.0);
        Vec out(g.len, 0.0);
        add_result(out, acc);
        return out;
    }

    double weight(int i, int j) const {
        if (j == 0) return 0.0;
        return (i == 0 || i == j) ? 0.5 * g.h : g.h;
    }

    double varpi_mass(int j) const { return std::exp(m.lambda * g.h * j / m.c1); }

    void resolve_grid(const std::vector<double>& levels);
    void build();
    void build_tf();
    void build_winf();
    void build_varpi();
    void build_boundary();
    void build_w1();
    void build_above();

    DensityTable make_table(double u, Side side, const std::vector<const Vec*>& rows) const;
    DensityTable interpolate(double u, Side side, const DensityTable& a, const DensityTable& b, double w) const;
    HybridFunction export_fn(const Vec& v, long start) const;
    Vec vartheta_lattice(int j, int m, int n) const;
    int node_of(double x, bool& exact) const;
};

void DensityEngine::Impl::resolve_grid(const std::vector<double>& levels) {
    const double b = m.b;
    const double ht = opt.amount_step;
    if (!(ht > 0.0) || !(opt.t_max > 0.0) || opt.time_points < 10 || opt.n_max < 1)
        throw ConfigError("density grid: need amount_step > 0, t_max > 0, time_points >= 10, n_max >= 1");
    double top = b;
    for (double u : levels) {
        if (u < 0.0) throw DomainError("initial capital must be nonnegative");
        top = std::max(top, u);
    }
    auto on_grid = [](double x, double h) {
        const double p = x / h;
        return std::abs(p - std::round(p)) < 1e-7;
    };
    double h = ht;
    int J = 0;
    if (b > 0.0) {
        const int base = static_cast<int>(std::ceil(b / ht - 1e-9));
        J = base;
        for (int cand = base; cand <= 8 * base; ++cand) {
            const double hc = b / cand;
            if (std::all_of(levels.begin(), levels.end(), [&](double u) { return on_grid(u, hc); })) {
                J = cand;
                break;
            }
        }
        h = b / J;
    } else {
        for (double u : levels)
            if (u > 0.0) {
                h = u / std::ceil(u / ht - 1e-9);
                break;
            }
    }
    const int Y = top > b ? static_cast<int>(std::ceil((top - b) / h - 1e-7)) : 0;
    const double dt_target = opt.t_max / static_cast<double>(opt.time_points);
    int q = 1;
    double dt = dt_target;
    if (J > 0) {
        q = static_cast<int>(std::ceil(h / (m.c1 * dt_target) - 1e-9));
        dt = h / (m.c1 * q);
    }
    g.dt = dt;
    g.h = h;
    g.q = q;
    g.J = J;
    g.Y = Y;
    g.nt = static_cast<long>(std::ceil(opt.t_max / dt - 1e-9));
    g.k0 = static_cast<long>(J) * q;
    g.len = idx(g.nt + 2 * g.k0 + 1);
    g.fft_size = fft::good_size(2 * g.len - idx(g.k0));
    g.n_max = opt.n_max;
}

void DensityEngine::Impl::build_tf() {
    const int I = g.J + g.Y;
    tf1.assign(idx(g.J + 1), {});
    tf2.assign(idx(I + 1), {});
    tf2bar.assign(idx(I + 1), {});
    parallel_for(idx(I + 1), [&](std::size_t i) {
        const double x = g.h * static_cast<double>(i);
        auto column = [&](int drift, bool survival, int n) {
            return sample(g.k0, [&](double t) { return tf_value(*kc, drift, survival, x, n, t); });
        };
        if (static_cast<int>(i) <= g.J)
            for (int k = 0; k < N; ++k) tf1[i].push_back(column(1, false, k));
        for (int k = 0; k < N; ++k) tf2[i].push_back(column(2, false, k));
        if (static_cast<int>(i) >= g.J)
            for (int k = 0; k < N; ++k) tf2bar[i].push_back(column(2, true, k));
    });
}

void DensityEngine::Impl::build_winf() {
    const int I = g.J + g.Y;
    const ConvolutionPowers& pw = kc->powers();
    winf0.assign(idx(N + 1), Vec{});
    for (int n = 1; n <= N; ++n)
        winf0[idx(n)] = sample(g.k0, [&](double t) { return m.lambda / m.c1 * tf_value(*kc, 1, true, 0.0, n - 1, t); });
    std::vector<fft::Spectrum> zero_spec(idx(N + 1));
    for (int n = 1; n < N; ++n) zero_spec[idx(n)] = spec(winf0[idx(n)]);

    winf.assign(idx(I + 1), {});
    parallel_for(idx(I + 1), [&](std::size_t j) {
        const double v = g.h * static_cast<double>(j);
        std::vector<Vec>& out = winf[j];
        out.assign(idx(N + 1), Vec{});
        out[1] = sample(g.k0, [&](double t) {
            return m.lambda * std::exp(-m.lambda * t) * m.claims.survival(v + m.c1 * t);
        });
        std::vector<fft::Spectrum> e_spec(idx(N));
        for (int jj = 1; jj < N; ++jj)
            e_spec[idx(jj)] = spec(sample(g.k0, [&](double s) {
                return s * poisson_weight(m.lambda, jj, s) * pw.pdf(jj, v + m.c1 * s);
            }));
        for (int n = 1; n < N; ++n) {
            Vec f = sample(g.k0, [&](double t) {
                if (t <= 0.0) return 0.0;
                const double y = v + m.c1 * t;
                const double lead = std::exp(n * std::log(m.lambda * t) - m.lambda * t - std::lgamma(n + 1.0));
                return lead * m.lambda * (pw.cdf(n, y) - pw.cdf(n + 1, y));
            });
            fft::ProductAccumulator acc(g.fft_size);
            for (int jj = 1; jj <= n; ++jj) acc.add(e_spec[idx(jj)], zero_spec[idx(n + 1 - jj)], -m.c1);
            add_result(f, acc);
            out[idx(n + 1)] = std::move(f);
        }
    });
}

void DensityEngine::Impl::build_varpi() {
    const int J = g.J;
    varpi.assign(idx(J + 1), std::vector<Vec>(idx(N), Vec{}));
    if (N < 2) return;
    SpecTable tf1_spec(idx(J + 1));
    parallel_for(idx(J + 1), [&](std::size_t i) {
        for (int k = 0; k + 2 < N; ++k) tf1_spec[i].push_back(spec(tf1[i][idx(k)]));
    });
    SpecTable vs(idx(J + 1), std::vector<fft::Spectrum>(idx(N)));
    const ConvolutionPowers& pw = kc->powers();
    const double a = m.lambda / m.c1;
    for (int n = 1; n < N; ++n) {
        parallel_for(idx(J + 1), [&](std::size_t js) {
            const int j = static_cast<int>(js);
            const double v = g.h * j;
            Vec out = sample(g.k0 - shift_of(j), [&](double t) {
                const double y = m.c1 * t + v;
                if (y < 0.0 || v == 0.0) return 0.0;
                return -v * poisson_weight(m.lambda, n, t) * pw.pdf(n, y);
            });
            fft::ProductAccumulator acc(g.fft_size);
            for (int i = 0; i <= j; ++i) {
                const double w = weight(i, j);
                if (w == 0.0) continue;
                add_shifted(out, tf1[idx(i)][idx(n - 1)], shift_of(j - i), a * w * varpi_mass(j - i));
                if (j - i == 0) continue;
                for (int k = 0; k <= n - 2; ++k) acc.add(tf1_spec[idx(i)][idx(k)], vs[idx(j - i)][idx(n - 1 - k)], a * w);
            }
            add_result(out, acc);
            varpi[js][idx(n)] = std::move(out);
        });
        if (n + 1 < N)
            parallel_for(idx(J + 1), [&](std::size_t j) { vs[j][idx(n)] = spec(varpi[j][idx(n)]); });
    }
}

void DensityEngine::Impl::build_boundary() {
    const int J = g.J;
    const double a2 = m.lambda / m.c2;
    chi.assign(idx(N + 1), Vec{});
    gam.assign(idx(N + 1), Vec{});
    kfun.assign(idx(N + 1), Vec(g.len, 0.0));
    SpecTable tf2_spec(idx(J + 1)), vs(idx(J + 1)), ws(idx(J + 1));
    parallel_for(idx(J + 1), [&](std::size_t i) {
        for (int k = 0; k + 1 < N; ++k) tf2_spec[i].push_back(spec(tf2[i][idx(k)]));
        vs[i].resize(idx(N));
        ws[i].resize(idx(N));
        for (int p = 1; p < N; ++p) {
            if (i > 0 && p + 1 < N) vs[i][idx(p)] = spec(varpi[i][idx(p)]);
            ws[i][idx(p)] = spec(winf[i][idx(p)]);
        }
    });
    // chi_n for n = 1..N-1, gamma_n for n = 1..N
    parallel_for(idx(N), [&](std::size_t ns) {
        const int n = static_cast<int>(ns) + 1;
        if (n < N) {
            Vec out = varpi[idx(J)][idx(n)];
            fft::ProductAccumulator acc(g.fft_size);
            for (int i = 0; i <= J; ++i) {
                const double w = weight(i, J);
                if (w == 0.0) continue;
                add_shifted(out, tf2[idx(i)][idx(n - 1)], shift_of(J - i), -a2 * w * varpi_mass(J - i));
                if (J - i == 0) continue;
                for (int mm = 0; mm <= n - 2; ++mm) acc.add(vs[idx(J - i)][idx(n - 1 - mm)], tf2_spec[idx(i)][idx(mm)], -a2 * w);
            }
            add_result(out, acc);
            chi[idx(n)] = std::move(out);
        }
        Vec gm(g.len, 0.0);
        for (std::size_t gi = 0; gi < g.len; ++gi) gm[gi] = a2 * tf2bar[idx(J)][idx(n - 1)][gi];
        fft::ProductAccumulator acc(g.fft_size);
        for (int i = 0; i <= J; ++i) {
            const double w = weight(i, J);
            if (w == 0.0) continue;
            for (int mm = 0; mm <= n - 2; ++mm) acc.add(ws[idx(J - i)][idx(n - 1 - mm)], tf2_spec[idx(i)][idx(mm)], a2 * w);
        }
        add_result(gm, acc);
        gam[idx(n)] = std::move(gm);
    });
    if (J == 0) return;
    // K_n = e^{-lambda b / c1} [gamma_n - w_inf(b, n) - sum_j chi_j * K_{n-j}](t - b/c1)
    std::vector<fft::Spectrum> chi_spec(idx(N)), k_spec(idx(N));
    for (int n = 1; n < N; ++n) chi_spec[idx(n)] = spec(chi[idx(n)]);
    const double damp = std::exp(-m.lambda * m.b / m.c1);
    for (int n = 1; n <= N; ++n) {
        Vec r = gam[idx(n)];
        for (std::size_t gi = 0; gi < g.len; ++gi) r[gi] -= winf[idx(J)][idx(n)][gi];
        fft::ProductAccumulator acc(g.fft_size);
        for (int j = 1; j <= n - 1; ++j) acc.add(chi_spec[idx(j)], k_spec[idx(n - j)], -1.0);
        add_result(r, acc);
        Vec k(g.len, 0.0);
        add_shifted(k, r, -g.k0, damp);
        kfun[idx(n)] = std::move(k);
        if (n < N) k_spec[idx(n)] = spec(kfun[idx(n)]);
    }
}

void DensityEngine::Impl::build_w1() {
    const int J = g.J;
    w1.assign(idx(J + 1), std::vector<Vec>(idx(N + 1), Vec{}));
    if (J == 0) return;
    std::vector<fft::Spectrum> k_spec(idx(N));
    for (int n = 1; n < N; ++n) k_spec[idx(n)] = spec(kfun[idx(n)]);
    parallel_for(idx(J + 1), [&](std::size_t js) {
        const int j = static_cast<int>(js);
        std::vector<fft::Spectrum> vs(idx(N));
        if (j > 0)
            for (int p = 1; p < N; ++p) vs[idx(p)] = spec(varpi[js][idx(p)]);
        for (int mm = 1; mm <= N; ++mm) {
            Vec out = winf[js][idx(mm)];
            add_shifted(out, kfun[idx(mm)], shift_of(j), varpi_mass(j));
            if (j > 0) {
                fft::ProductAccumulator acc(g.fft_size);
                for (int l = 1; l <= mm - 1; ++l) acc.add(k_spec[idx(l)], vs[idx(mm - l)], 1.0);
                add_result(out, acc);
            }
            std::fill(out.begin(), out.begin() + g.k0, 0.0);
            w1[js][idx(mm)] = std::move(out);
        }
    });
}

void DensityEngine::Impl::build_above() {
    const int J = g.J, Y = g.Y;
    const int I = J + Y;
    eps.assign(idx(Y + 1), std::vector<Vec>(idx(N), Vec{}));
    phi2.assign(idx(Y + 1), std::vector<Vec>(idx(N + 1), Vec{}));
    SpecTable tf2_spec(idx(I + 1)), w1_spec(idx(J + 1));
    parallel_for(idx(I + 1), [&](std::size_t i) {
        for (int k = 0; k + 1 < N; ++k) tf2_spec[i].push_back(spec(tf2[i][idx(k)]));
        if (static_cast<int>(i) <= J && J > 0) {
            w1_spec[i].resize(idx(N));
            for (int n = 1; n < N; ++n) w1_spec[i][idx(n)] = spec(w1[i][idx(n)]);
        }
    });
    parallel_for(idx(Y + 1), [&](std::size_t is) {
        const int i = static_cast<int>(is);
        for (int n = 0; n < N; ++n) {
            Vec out = tf2bar[idx(i + J)][idx(n)];
            if (J > 0 && n >= 1) {
                fft::ProductAccumulator acc(g.fft_size);
                for (int j = 0; j <= J; ++j)
                    for (int np = 1; np <= n; ++np)
                        acc.add(w1_spec[idx(j)][idx(np)], tf2_spec[idx(i + J - j)][idx(n - np)], weight(j, J));
                add_result(out, acc);
            }
            std::fill(out.begin(), out.begin() + g.k0, 0.0);
            eps[is][idx(n)] = std::move(out);
        }
    });
    const double a2 = m.lambda / m.c2;
    SpecTable ps(idx(Y + 1), std::vector<fft::Spectrum>(idx(N)));
    for (int n = 1; n <= N; ++n) {
        parallel_for(idx(Y + 1), [&](std::size_t is) {
            const int i = static_cast<int>(is);
            Vec out(g.len, 0.0);
            for (std::size_t gi = 0; gi < g.len; ++gi) out[gi] = a2 * eps[is][idx(n - 1)][gi];
            fft::ProductAccumulator acc(g.fft_size);
            for (int x = 0; x <= i; ++x) {
                const double w = weight(x, i);
                if (w == 0.0) continue;
                for (int mm = 0; mm <= n - 2; ++mm) acc.add(tf2_spec[idx(x)][idx(mm)], ps[idx(i - x)][idx(n - 1 - mm)], a2 * w);
            }
            add_result(out, acc);
            std::fill(out.begin(), out.begin() + g.k0, 0.0);
            phi2[is][idx(n)] = std::move(out);
        });
        if (n < N) parallel_for(idx(Y + 1), [&](std::size_t is) { ps[is][idx(n)] = spec(phi2[is][idx(n)]); });
    }
}

void DensityEngine::Impl::build() {
    N = opt.n_max;
    const double amount_max = m.b + g.h * g.Y + g.h;
    kc = std::make_unique<KernelCache>(m, TimeGrid{g.dt, g.t_max() + m.b / m.c1 + g.dt}, N + 1, amount_max,
                                       std::min(1e-2, g.dt * m.c2));
    build_tf();
    build_winf();
    build_varpi();
    build_boundary();
    build_w1();
    build_above();
}

int DensityEngine::Impl::node_of(double x, bool& exact) const {
    const double p = x / g.h;
    const double r = std::round(p);
    exact = std::abs(p - r) < 1e-7;
    return static_cast<int>(exact ? r : std::floor(p));
}

DensityTable DensityEngine::Impl::make_table(double u, Side side, const std::vector<const Vec*>& rows) const {
    DensityTable tab;
    tab.u = u;
    tab.side = side;
    tab.step = g.dt;
    tab.n_max = N;
    const double tol = opt.negative_tolerance;
    for (const Vec* v : rows) {
        std::vector<double> r(idx(g.nt + 1));
        for (long k = 0; k <= g.nt; ++k) r[idx(k)] = (*v)[idx(g.k0 + k)];
        r[0] *= 2.0;  // lattice samples hold the mean of the one-sided limits
        for (double& x : r) {
            if (x >= 0.0) continue;
            tab.most_negative = std::min(tab.most_negative, x);
            if (x < -tol)
                throw NumericalError("density table: value " + std::to_string(x) + " below the clamping tolerance");
            x = 0.0;
            ++tab.clamped;
        }
        tab.rows.push_back(std::move(r));
    }
    return tab;
}

DensityTable DensityEngine::Impl::interpolate(double u, Side side, const DensityTable& a, const DensityTable& b,
                                              double w) const {
    DensityTable out = a;
    out.u = u;
    out.side = side;
    for (std::size_t n = 0; n < out.rows.size(); ++n)
        for (std::size_t k = 0; k < out.rows[n].size(); ++k)
            out.rows[n][k] = (1.0 - w) * a.rows[n][k] + w * b.rows[n][k];
    out.clamped = a.clamped + b.clamped;
    out.most_negative = std::min(a.most_negative, b.most_negative);
    return out;
}

HybridFunction DensityEngine::Impl::export_fn(const Vec& v, long start) const {
    start = std::max(0L, start);
    std::vector<double> s(v.begin() + start, v.end());
    if (!s.empty()) s[0] *= 2.0;
    return HybridFunction::from_samples(Domain::time, t_of(idx(start)), g.dt, std::move(s));
}

DensityEngine::DensityEngine(const RiskModel& m, DensityOptions opt, std::vector<double> levels)
    : impl_(std::make_unique<Impl>(m, opt)) {
    m.validate();
    impl_->resolve_grid(levels);
    impl_->build();
}

DensityEngine::~DensityEngine() = default;

const DensityGrid& DensityEngine::grid() const { return impl_->g; }
const RiskModel& DensityEngine::model() const { return impl_->m; }
const KernelCache& DensityEngine::kernels() const { return *impl_->kc; }

DensityTable DensityEngine::density(double u) const { return u <= impl_->m.b ? w1(u) : w2(u); }

DensityTable DensityEngine::w1(double u) const {
    const Impl& I = *impl_;
    if (u < 0.0 || u > I.m.b + 1e-12) throw DomainError("w1: u must lie in [0, b]");
    if (I.g.J == 0) {
        // b = 0: the only level below the threshold is u = 0, where the process starts at b
        std::vector<const Vec*> rows;
        for (int n = 1; n <= I.N; ++n) rows.push_back(&I.phi2[0][idx(n)]);
        return I.make_table(u, Side::below, rows);
    }
    bool exact = false;
    const int j = I.node_of(u, exact);
    auto at = [&](int node) {
        std::vector<const Vec*> rows;
        for (int n = 1; n <= I.N; ++n) rows.push_back(&I.w1[idx(node)][idx(n)]);
        return I.make_table(I.g.h * node, Side::below, rows);
    };
    if (exact) {
        DensityTable t = at(j);
        t.u = u;
        return t;
    }
    return I.interpolate(u, Side::below, at(j), at(j + 1), u / I.g.h - j);
}

DensityTable DensityEngine::w2(double u) const {
    const Impl& I = *impl_;
    const double y = u - I.m.b;
    if (!(y > 0.0) || y > I.g.h * I.g.Y + 1e-9) throw DomainError("w2: u must lie in (b, b + grid range]");
    bool exact = false;
    const int i = I.node_of(y, exact);
    auto at = [&](int node) {
        std::vector<const Vec*> rows;
        for (int n = 1; n <= I.N; ++n) rows.push_back(&I.phi2[idx(node)][idx(n)]);
        return I.make_table(I.m.b + I.g.h * node, Side::above, rows);
    };
    if (exact) {
        DensityTable t = at(i);
        t.u = u;
        return t;
    }
    return I.interpolate(u, Side::above, at(i), at(i + 1), y / I.g.h - i);
}

DensityTable DensityEngine::w_inf(double u) const {
    const Impl& I = *impl_;
    if (u < 0.0 || u > I.g.h * (I.g.J + I.g.Y) + 1e-9) throw DomainError("w_inf: u outside the capital grid");
    bool exact = false;
    const int j = I.node_of(u, exact);
    auto at = [&](int node) {
        std::vector<const Vec*> rows;
        for (int n = 1; n <= I.N; ++n) rows.push_back(&I.winf[idx(node)][idx(n)]);
        return I.make_table(I.g.h * node, Side::below, rows);
    };
    if (exact) {
        DensityTable t = at(j);
        t.u = u;
        return t;
    }
    return I.interpolate(u, Side::below, at(j), at(j + 1), u / I.g.h - j);
}

HybridFunction DensityEngine::nu_density(double v, int n) const {
    const Impl& I = *impl_;
    bool exact = false;
    const int j = I.node_of(v, exact);
    if (!exact || j < 0 || j > I.g.J) throw UsageError("nu_density: v must be a capital node in [0, b]");
    if (n < 0 || n >= I.N) throw UsageError("nu_density: order out of range");
    if (n == 0) return HybridFunction::unit_atom(Domain::time, I.g.dt, -v / I.m.c1, I.varpi_mass(j));
    return I.export_fn(I.varpi[idx(j)][idx(n)], I.g.k0 - I.shift_of(j));
}

HybridFunction DensityEngine::sigma_kernel(int n) const {
    const Impl& I = *impl_;
    if (n < 0 || n >= I.N) throw UsageError("sigma_kernel: order out of range");
    if (n == 0) return HybridFunction::unit_atom(Domain::time, I.g.dt, -I.m.b / I.m.c1, I.varpi_mass(I.g.J));
    return I.export_fn(I.chi[idx(n)], 0);
}

HybridFunction DensityEngine::gamma_kernel(int n) const {
    const Impl& I = *impl_;
    if (n < 1 || n > I.N) throw UsageError("gamma_kernel: order out of range");
    return I.export_fn(I.gam[idx(n)], I.g.k0);
}

HybridFunction DensityEngine::epsilon_kernel(double y, int n) const {
    const Impl& I = *impl_;
    bool exact = false;
    const int i = I.node_of(y, exact);
    if (!exact || i < 0 || i > I.g.Y) throw UsageError("epsilon_kernel: y must be a capital node above b");
    if (n < 0 || n >= I.N) throw UsageError("epsilon_kernel: order out of range");
    return I.export_fn(I.eps[idx(i)][idx(n)], I.g.k0);
}

// vartheta(u_j, m, n) on the lattice.
Vec DensityEngine::Impl::vartheta_lattice(int j, int m, int n) const {
    const Impl& I = *this;
    const int J = I.g.J;
    Vec out(I.g.len, 0.0);
    Vec diff = I.gam[idx(n)];
    for (std::size_t gi = 0; gi < diff.size(); ++gi) diff[gi] -= I.winf[idx(J)][idx(n)][gi];
    const int p = m - n;
    if (p == 0) {
        I.add_shifted(out, I.winf[idx(j)][idx(n)], I.g.k0, I.varpi_mass(J));
        I.add_shifted(out, diff, I.shift_of(j), I.varpi_mass(j));
        return out;
    }
    Vec a = I.convolve(I.chi[idx(p)], I.winf[idx(j)][idx(n)]);
    for (std::size_t gi = 0; gi < out.size(); ++gi) out[gi] += a[gi];
    if (j > 0) {
        Vec b = I.convolve(diff, I.varpi[idx(j)][idx(p)]);
        for (std::size_t gi = 0; gi < out.size(); ++gi) out[gi] += b[gi];
    }
    return out;
}

HybridFunction DensityEngine::vartheta(double u, int m, int n) const {
    const Impl& I = *impl_;
    if (m < n) throw UsageError("vartheta: requires m >= n");
    if (n < 1 || m >= I.N + 1 || m - n >= I.N) throw UsageError("vartheta: order out of range");
    bool exact = false;
    const int j = I.node_of(u, exact);
    if (!exact || j < 0 || j > I.g.J) throw UsageError("vartheta: u must be a capital node in [0, b]");
    return I.export_fn(I.vartheta_lattice(j, m, n), 0);
}

DensityTable DensityEngine::w1_by_vartheta(double u) const {
    const Impl& I = *impl_;
    bool exact = false;
    const int j = I.node_of(u, exact);
    if (!exact || j < 0 || j > I.g.J || I.g.J == 0) throw UsageError("w1_by_vartheta: u must be a capital node in [0, b]");
    const double damp = std::exp(-I.m.lambda * I.m.b / I.m.c1);
    std::vector<Vec> w(idx(I.N + 1));
    for (int mm = 1; mm <= I.N; ++mm) {
        Vec r(I.g.len, 0.0);
        for (int n = 1; n <= mm; ++n) {
            if (mm - n >= I.N) continue;
            Vec th = I.vartheta_lattice(j, mm, n);
            for (std::size_t gi = 0; gi < r.size(); ++gi) r[gi] += th[gi];
        }
        for (int n = 1; n < mm; ++n) {
            if (mm - n >= I.N) continue;
            Vec c = I.convolve(I.chi[idx(mm - n)], w[idx(n)]);
            for (std::size_t gi = 0; gi < r.size(); ++gi) r[gi] -= c[gi];
        }
        Vec out(I.g.len, 0.0);
        I.add_shifted(out, r, -I.g.k0, damp);
        std::fill(out.begin(), out.begin() + I.g.k0, 0.0);
        w[idx(mm)] = std::move(out);
    }
    std::vector<const Vec*> rows;
    for (int mm = 1; mm <= I.N; ++mm) rows.push_back(&w[idx(mm)]);
    DensityTable t = I.make_table(u, Side::below, rows);
    return t;
}

DensityTable DensityEngine::w2_explicit(double u, int m_max) const {
    const Impl& I = *impl_;
    const double y = u - I.m.b;
    bool exact = false;
    const int iy = I.node_of(y, exact);
    if (!(y > 0.0) || !exact || iy > I.g.Y) throw UsageError("w2_explicit: u - b must be a capital node above b");
    m_max = std::min(m_max, I.N);
    const long nt = I.g.nt;
    const long k0 = I.g.k0;
    const double c2 = I.m.c2, lambda = I.m.lambda;
    const double a2 = lambda / c2;
    const ConvolutionPowers& pw = I.kc->powers();
    const auto npos = idx(nt + 1);

    // beta[p][k][v-node] on the nonnegative time lattice
    std::vector<std::vector<std::vector<Vec>>> beta(idx(m_max));
    for (int p = 1; p < m_max; ++p) {
        beta[idx(p)].assign(idx(m_max - p), std::vector<Vec>(idx(iy + 1)));
        parallel_for(idx(iy + 1), [&](std::size_t vi) {
            const double v = I.g.h * static_cast<double>(vi);
            Vec bp(npos);
            for (std::size_t l = 0; l < npos; ++l) bp[l] = b_kernel(*I.kc, p, v, c2 * I.g.dt * static_cast<double>(l));
            for (int k = 0; k + p < m_max; ++k) {
                Vec out(npos, 0.0);
                if (k == 0) {
                    for (std::size_t l = 0; l < npos; ++l) {
                        const double z = I.g.dt * static_cast<double>(l);
                        out[l] = c2 * bp[l] * std::exp(-lambda * z);
                    }
                    out[0] *= 0.5;
                } else {
                    Vec a(npos), fk(npos);
                    for (std::size_t l = 0; l < npos; ++l) {
                        const double yy = c2 * I.g.dt * static_cast<double>(l);
                        a[l] = yy * bp[l];
                        fk[l] = pw.pdf(k, yy);
                    }
                    fk[0] *= 0.5;
                    const Vec s = fft::convolve(a, fk);
                    for (std::size_t l = 0; l < npos; ++l) {
                        const double z = I.g.dt * static_cast<double>(l);
                        out[l] = poisson_weight(lambda, k, z) * c2 * I.g.dt * s[l];
                    }
                }
                beta[idx(p)][idx(k)][vi] = std::move(out);
            }
        });
    }
    auto positive = [&](const Vec& v) { return Vec(v.begin() + k0, v.begin() + k0 + static_cast<long>(npos)); };
    std::vector<Vec> rows(idx(m_max), Vec(npos, 0.0));
    parallel_for(idx(m_max), [&](std::size_t ms) {
        const int m = static_cast<int>(ms) + 1;
        Vec& out = rows[ms];
        const Vec e0 = positive(I.eps[idx(iy)][idx(m - 1)]);
        for (std::size_t l = 0; l < npos; ++l) out[l] += a2 * e0[l];
        for (int p = 1; p <= m - 1; ++p)
            for (int k = 0; k + p <= m - 1; ++k) {
                const int n = m - 1 - p - k;
                const double pref = std::pow(a2, p + 1);
                for (int x = 0; x <= iy; ++x) {
                    const double w = I.weight(x, iy);
                    if (w == 0.0) continue;
                    const Vec e = positive(I.eps[idx(x)][idx(n)]);
                    const Vec s = fft::convolve(beta[idx(p)][idx(k)][idx(iy - x)], e);
                    for (std::size_t l = 0; l < npos; ++l) out[l] += pref * w * I.g.dt * s[l];
                }
            }
    });
    DensityTable tab;
    tab.u = u;
    tab.side = Side::above;
    tab.step = I.g.dt;
    tab.n_max = m_max;
    for (auto& r : rows) {
        r[0] *= 2.0;
        tab.rows.push_back(std::move(r));
    }
    return tab;
}

double DensityEngine::first_claim_density(const RiskModel& m, double u, double t) {
    if (t < 0.0) return 0.0;
    double level;
    if (u > m.b) level = u + m.c2 * t;
    else {
        const double reach = (m.b - u) / m.c1;
        level = t < reach ? u + m.c1 * t : m.b + m.c2 * (t - reach);
    }
    return m.lambda * std::exp(-m.lambda * t) * m.claims.survival(level);
}

double DensityEngine::candidate_w1_first(const RiskModel& m, double u, double t) {
    return m.lambda / m.c2 * std::exp(-m.lambda * t) * m.claims.survival(m.c2 * t + m.b + m.c2 / m.c1 * (u - m.b));
}

double DensityEngine::candidate_w1_second(const RiskModel& m, double u, double t) {
    return m.lambda / m.c2 * std::exp(-m.lambda * (t + m.b / m.c1)) *
           m.claims.survival(m.c2 * t + m.b + m.c2 / m.c1 * (u - m.b));
}

}  // namespace refract
