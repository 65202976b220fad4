#include "refract/model.hpp"

#include "refract/errors.hpp"

#include <sstream>

namespace refract {

void RiskModel::validate() const {
    if (!(lambda > 0.0)) throw ConfigError("model: lambda (claim intensity) must be > 0");
    if (!(c1 > 0.0)) throw ConfigError("model: c1 (premium rate below b) must be > 0");
    if (!(c2 > 0.0)) throw ConfigError("model: c2 (premium rate above b) must be > 0");
    if (!(b >= 0.0)) throw ConfigError("model: b (threshold) must be >= 0");
    if (c2 > c1) {
        std::ostringstream os;
        os << "model: c2 = " << c2 << " exceeds c1 = " << c1 << "; dividends need c2 <= c1";
        throw ConfigError(os.str());
    }
    const double load = lambda * claims.mean();
    if (!(c2 > load)) {
        std::ostringstream os;
        os << "model: net profit condition violated: c2 = " << c2 << " must exceed lambda*E[X1] = "
           << load << " (lambda = " << lambda << ", E[X1] = " << claims.mean() << ")";
        throw ConfigError(os.str());
    }
}

}  // namespace refract
