#include "refract/refracted.hpp"

#include "refract/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace refract {

double aligned_amount_step(double b, double h_x) {
    if (!(h_x > 0.0)) throw UsageError("amount step must be positive");
    if (b <= 0.0) return h_x;
    return b / std::ceil(b / h_x - 1e-9);
}

RefractedTransform::RefractedTransform(const RiskModel& m, TransformParams p, double h_x, double u_max)
    : model_(m),
      params_(p),
      h_(aligned_amount_step(m.b, h_x)),
      u_max_(std::max(u_max, m.b)),
      classical_(m, p, h_, m.b) {
    const double b = m.b;
    rho2_ = solve_root(m.lambda, m.c2, p, m.claims);
    const double a2 = m.lambda * p.r / m.c2;
    const double contraction = a2 * dickson_hipp_mass(m.claims, rho2_);
    if (!(contraction < 1.0))
        throw NumericalError("refracted renewal equation is not a contraction (factor " +
                             std::to_string(contraction) + ")");

    const std::size_t nb = b_index();
    const auto ny = static_cast<std::size_t>(std::ceil((u_max_ - b) / h_ - 1e-9)) + 1;
    const std::size_t total = nb + ny;
    tf2_.resize(total);
    tf2bar_.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        const double x = h_ * static_cast<double>(i);
        tf2_[i] = m.claims.dickson_hipp_pdf(rho2_, x);
        tf2bar_[i] = m.claims.dickson_hipp_survival(rho2_, x);
    }

    // Trapezoid of v(b - x) T f(x) over [0, b] for a grid function v on [0, b].
    auto conv_at_b = [&](std::span<const double> v) {
        if (nb == 0) return 0.0;
        double s = 0.5 * (v[nb] * tf2_[0] + v[0] * tf2_[nb]);
        for (std::size_t j = 1; j < nb; ++j) s += v[nb - j] * tf2_[j];
        return s * h_;
    };
    const auto phi_inf = classical_.phi_inf_grid();
    const auto nu = classical_.nu_grid();
    chi_ = nu[nb] - a2 * conv_at_b(nu);
    if (std::abs(chi_) < 1e-12) throw NumericalError("chi(b) vanishes; phi1 is undefined for this model");
    k_ = (a2 * (conv_at_b(phi_inf) + tf2bar_[nb]) - phi_inf[nb]) / chi_;

    phi1_.resize(nb + 1);
    for (std::size_t i = 0; i <= nb; ++i) phi1_[i] = phi_inf[i] + k_ * nu[i];

    h_vals_.resize(ny);
    for (std::size_t i = 0; i < ny; ++i) {
        // int_0^b phi1(v) T f(y + b - v) dv, v-nodes j
        double s = 0.0;
        if (nb > 0) {
            s = 0.5 * (phi1_[0] * tf2_[i + nb] + phi1_[nb] * tf2_[i]);
            for (std::size_t j = 1; j < nb; ++j) s += phi1_[j] * tf2_[i + nb - j];
            s *= h_;
        }
        h_vals_[i] = s + tf2bar_[i + nb];
    }
    std::vector<double> forcing(ny);
    for (std::size_t i = 0; i < ny; ++i) forcing[i] = a2 * h_vals_[i];
    phi2_ = solve_renewal(a2, tf2_, forcing, h_);
}

std::size_t RefractedTransform::b_index() const {
    return static_cast<std::size_t>(std::llround(model_.b / h_));
}

double RefractedTransform::phi1(double u) const {
    if (u < 0.0 || u > model_.b + 1e-12) throw DomainError("phi1: u must lie in [0, b]");
    return interpolate_grid(phi1_, h_, u);
}

double RefractedTransform::phi2(double u) const {
    if (u < model_.b) throw DomainError("phi2: u must be >= b");
    if (u > u_max_ + 1e-9) throw DomainError("phi2: u beyond the tabulated range");
    return interpolate_grid(phi2_, h_, u - model_.b);
}

double RefractedTransform::h_fn(double y) const {
    if (y < 0.0) throw DomainError("h: y must be nonnegative");
    return interpolate_grid(h_vals_, h_, y);
}

double RefractedTransform::boundary_gap() const { return std::abs(phi1_.back() - phi2_.front()); }

double RefractedTransform::boundary_identity_residual() const {
    const std::size_t nb = b_index();
    double s = 0.0;
    if (nb > 0) {
        s = 0.5 * (phi1_[0] * tf2_[nb] + phi1_[nb] * tf2_[0]);
        for (std::size_t j = 1; j < nb; ++j) s += phi1_[j] * tf2_[nb - j];
        s *= h_;
    }
    const double lr = model_.lambda * params_.r;
    return model_.c2 * phi2_.front() - lr * (s + tf2bar_[nb]);
}

// phi at node i of the joint grid: phi1 up to b (inclusive), phi2 above.
double RefractedTransform::combined(std::size_t i) const {
    const std::size_t nb = b_index();
    return i <= nb ? phi1_[i] : phi2_[i - nb];
}

double RefractedTransform::max_ide_residual(int side, double lo, double hi) const {
    const RiskModel& m = model_;
    const double c = side == 1 ? m.c1 : m.c2;
    const std::size_t nb = b_index();
    const std::size_t last = nb + phi2_.size() - 1;
    auto i_lo = static_cast<std::size_t>(std::ceil(lo / h_ - 1e-9));
    auto i_hi = static_cast<std::size_t>(std::floor(hi / h_ + 1e-9));
    i_lo = std::max<std::size_t>(i_lo, 1);
    i_hi = std::min(i_hi, last - 1);
    if (side == 1) i_hi = std::min(i_hi, nb - 1);
    else i_lo = std::max(i_lo, nb + 1);
    double worst = 0.0;
    for (std::size_t i = i_lo; i <= i_hi; ++i) {
        const double u = h_ * static_cast<double>(i);
        const double deriv = (combined(i + 1) - combined(i - 1)) / (2.0 * h_);
        double conv = 0.5 * (combined(i) * m.claims.pdf(0.0) + combined(0) * m.claims.pdf(u));
        for (std::size_t j = 1; j < i; ++j) conv += combined(i - j) * m.claims.pdf(h_ * static_cast<double>(j));
        conv *= h_;
        const double rhs = ((m.lambda + params_.delta) * combined(i) - m.lambda * params_.r * conv -
                            m.lambda * params_.r * m.claims.survival(u)) /
                           c;
        worst = std::max(worst, std::abs(deriv - rhs));
    }
    return worst;
}

}  // namespace refract
