#pragma once

#include "refract/claims.hpp"

namespace refract {

/// Compound Poisson surplus with premium rate c1 at or below the threshold b and c2 above it.
struct RiskModel {
    double lambda;
    double c1;
    double c2;
    double b;
    ClaimDistribution claims;

    /// Throws ConfigError unless lambda, c1, c2 > 0, b >= 0, c2 <= c1 and c2 > lambda E[X].
    /// c1 == c2 is accepted: it is the unrefracted model.
    void validate() const;

    /// Net drift above the threshold, c2 - lambda E[X].
    double safety_margin() const { return c2 - lambda * claims.mean(); }
};

}  // namespace refract
