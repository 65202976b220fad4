#pragma once

#include "refract/claims.hpp"
#include "refract/model.hpp"

namespace refract {

/// Laplace argument for the ruin time (delta) and marking variable for the claim count (r).
struct TransformParams {
    double delta;
    double r;

    /// Throws ConfigError unless delta >= 0 and 0 < r <= 1.
    void validate() const;
};

struct LundbergRoots {
    double rho1;
    double rho2;
    double residual1;
    double residual2;
};

/// c s - (lambda + delta) + lambda r f^(s) at s.
double lundberg_function(double lambda, double c, const TransformParams& p,
                         const ClaimDistribution& d, double s);

/// Nonnegative root of c s - (lambda + delta) + lambda r f^(s) = 0. Returns 0 for
/// delta = 0, r = 1. Throws NumericalError when no sign change can be bracketed.
double solve_root(double lambda, double c, const TransformParams& p, const ClaimDistribution& d);

LundbergRoots solve_pair(const RiskModel& m, const TransformParams& p);

}  // namespace refract
