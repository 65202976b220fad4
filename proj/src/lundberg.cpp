#include "refract/lundberg.hpp"

#include "refract/errors.hpp"

#include <cmath>
#include <sstream>

namespace refract {

void TransformParams::validate() const {
    if (!(delta >= 0.0)) throw ConfigError("transform: delta must be >= 0");
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("transform: r must lie in (0, 1]");
}

double lundberg_function(double lambda, double c, const TransformParams& p,
                         const ClaimDistribution& d, double s) {
    return c * s - (lambda + p.delta) + lambda * p.r * d.laplace(s);
}

double solve_root(double lambda, double c, const TransformParams& p, const ClaimDistribution& d) {
    if (!(lambda > 0.0) || !(c > 0.0)) throw UsageError("solve_root: lambda and c must be > 0");
    p.validate();
    if (p.delta == 0.0 && p.r == 1.0) return 0.0;

    auto fn = [&](double s) { return lundberg_function(lambda, c, p, d, s); };
    double lo = 0.0;
    double hi = (lambda + p.delta) / c;
    double f_lo = fn(lo);
    double f_hi = fn(hi);
    for (int grow = 0; f_hi < 0.0 && grow < 60; ++grow) {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = fn(hi);
    }
    if (!(f_lo <= 0.0 && f_hi >= 0.0)) {
        std::ostringstream os;
        os << "solve_root: cannot bracket root: F(" << lo << ") = " << f_lo << ", F(" << hi
           << ") = " << f_hi;
        throw NumericalError(os.str());
    }
    if (f_hi == 0.0) return hi;

    // Newton from the right end; F is convex and increasing past the root.
    double s = hi;
    double f = f_hi;
    for (int it = 0; it < 100; ++it) {
        if (std::abs(f) < 1e-13) break;
        const double slope = c + lambda * p.r * d.laplace_derivative(s);
        double next = slope > 0.0 ? s - f / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double f_next = fn(next);
        (f_next < 0.0 ? lo : hi) = next;
        if (next == s) break;
        s = next;
        f = f_next;
        if (hi - lo <= 4e-16 * hi) break;
    }
    return s;
}

LundbergRoots solve_pair(const RiskModel& m, const TransformParams& p) {
    LundbergRoots roots{};
    roots.rho1 = solve_root(m.lambda, m.c1, p, m.claims);
    roots.rho2 = m.c2 == m.c1 ? roots.rho1 : solve_root(m.lambda, m.c2, p, m.claims);
    roots.residual1 = lundberg_function(m.lambda, m.c1, p, m.claims, roots.rho1);
    roots.residual2 = lundberg_function(m.lambda, m.c2, p, m.claims, roots.rho2);
    return roots;
}

}  // namespace refract
