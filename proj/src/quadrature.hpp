#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>

namespace refract::detail {

/// Composite 10-point Gauss-Legendre on [a, b] with panels no wider than `width`.
template <class F>
double gauss_panels(F&& f, double a, double b, double width) {
    if (!(b > a)) return 0.0;
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / width)));
    const double w = (b - a) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + w * p;
        sum += boost::math::quadrature::gauss<double, 10>::integrate(f, lo, lo + w);
    }
    return sum;
}

}  // namespace refract::detail
