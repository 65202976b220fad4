#include "refract/hybrid.hpp"

#include "refract/errors.hpp"
#include "refract/fft.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace refract {

namespace {

bool same_location(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

// Offsets closer than this fraction of a step to an integer count as lattice-aligned.
constexpr double kAlignTol = 1e-6;

}  // namespace

HybridFunction::HybridFunction(Domain domain, double step) : domain_(domain), step_(step) {
    if (!(step > 0.0)) throw UsageError("HybridFunction: step must be positive");
}

HybridFunction HybridFunction::unit_atom(Domain domain, double step, double location,
                                         double mass) {
    HybridFunction f(domain, step);
    f.add_atom(location, mass);
    return f;
}

HybridFunction HybridFunction::from_samples(Domain domain, double origin, double step,
                                            std::vector<double> samples) {
    HybridFunction f(domain, step);
    f.origin_ = origin;
    f.samples_ = std::move(samples);
    return f;
}

double HybridFunction::grid_end() const {
    if (samples_.empty()) return origin_;
    return origin_ + step_ * static_cast<double>(samples_.size() - 1);
}

void HybridFunction::add_atom(double location, double mass) {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), location,
                               [](const Atom& a, double x) { return a.location < x; });
    if (it != atoms_.end() && same_location(it->location, location)) {
        it->mass += mass;
        return;
    }
    if (it != atoms_.begin() && same_location(std::prev(it)->location, location)) {
        std::prev(it)->mass += mass;
        return;
    }
    atoms_.insert(it, Atom{location, mass});
}

double HybridFunction::density_at(double x) const {
    if (samples_.empty()) return 0.0;
    const double pos = (x - origin_) / step_;
    const double last = static_cast<double>(samples_.size() - 1);
    if (pos < -kAlignTol || pos > last + kAlignTol) return 0.0;
    if (pos <= 0.0) return samples_.front();
    if (pos >= last) return samples_.back();
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= samples_.size()) return samples_.back();
    return samples_[i] + frac * (samples_[i + 1] - samples_[i]);
}

double HybridFunction::integrate(double lo, double hi) const {
    if (lo > hi) throw UsageError("integrate: lo > hi");
    double total = 0.0;
    for (const Atom& a : atoms_)
        if (a.location >= lo && a.location <= hi) total += a.mass;
    if (samples_.size() < 2) return total;
    const double a = std::max(lo, origin_);
    const double b = std::min(hi, grid_end());
    if (!(a < b)) return total;
    const auto first = static_cast<std::size_t>(std::floor((a - origin_) / step_));
    for (std::size_t i = first; i + 1 < samples_.size(); ++i) {
        const double x0 = origin_ + step_ * static_cast<double>(i);
        const double x1 = x0 + step_;
        if (x0 >= b) break;
        const double p = std::max(a, x0);
        const double q = std::min(b, x1);
        if (q <= p) continue;
        const double fp = samples_[i] + (p - x0) / step_ * (samples_[i + 1] - samples_[i]);
        const double fq = samples_[i] + (q - x0) / step_ * (samples_[i + 1] - samples_[i]);
        total += 0.5 * (q - p) * (fp + fq);
    }
    return total;
}

double HybridFunction::integrate() const {
    const double inf = std::numeric_limits<double>::infinity();
    return integrate(-inf, inf);
}

double HybridFunction::laplace_at(double delta) const {
    double total = 0.0;
    for (const Atom& a : atoms_) total += a.mass * std::exp(-delta * a.location);
    const std::size_t n = samples_.size();
    if (n >= 2) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
            s += w * samples_[i] * std::exp(-delta * (origin_ + step_ * static_cast<double>(i)));
        }
        total += s * step_;
    }
    return total;
}

void HybridFunction::require_compatible(const HybridFunction& other) const {
    if (other.step_ == 0.0) return;
    if (domain_ != other.domain_) throw UsageError("HybridFunction: domain mismatch");
    if (std::abs(step_ - other.step_) > 1e-12 * step_)
        throw UsageError("HybridFunction: grid step mismatch");
}

HybridFunction& HybridFunction::axpy(double alpha, const HybridFunction& other) {
    if (step_ == 0.0) {
        *this = HybridFunction(other.domain_, other.step_);
    }
    require_compatible(other);
    for (const Atom& a : other.atoms_) add_atom(a.location, alpha * a.mass);
    if (other.samples_.empty()) return *this;
    if (samples_.empty()) {
        origin_ = other.origin_;
        samples_ = other.samples_;
        for (double& v : samples_) v *= alpha;
        return *this;
    }
    const double d = (other.origin_ - origin_) / step_;
    const double rounded = std::round(d);
    const bool aligned = std::abs(d - rounded) < kAlignTol;
    const long long n_self = static_cast<long long>(samples_.size());
    const long long n_other = static_cast<long long>(other.samples_.size());
    long long k_lo = aligned ? static_cast<long long>(rounded)
                             : static_cast<long long>(std::floor(d));
    long long k_hi = aligned ? k_lo + n_other - 1
                             : static_cast<long long>(std::ceil(d + static_cast<double>(n_other - 1)));
    const long long new_lo = std::min(0LL, k_lo);
    const long long new_hi = std::max(n_self - 1, k_hi);
    if (new_lo < 0 || new_hi >= n_self) {
        std::vector<double> grown(static_cast<std::size_t>(new_hi - new_lo + 1), 0.0);
        std::copy(samples_.begin(), samples_.end(), grown.begin() + (-new_lo));
        samples_ = std::move(grown);
        origin_ += step_ * static_cast<double>(new_lo);
        k_lo -= new_lo;
        k_hi -= new_lo;
    }
    if (aligned) {
        for (long long j = 0; j < n_other; ++j)
            samples_[static_cast<std::size_t>(k_lo + j)] += alpha * other.samples_[static_cast<std::size_t>(j)];
    } else {
        for (long long k = k_lo; k <= k_hi; ++k)
            samples_[static_cast<std::size_t>(k)] +=
                alpha * other.density_at(origin_ + step_ * static_cast<double>(k));
    }
    return *this;
}

HybridFunction& HybridFunction::operator+=(const HybridFunction& other) { return axpy(1.0, other); }
HybridFunction& HybridFunction::operator-=(const HybridFunction& other) { return axpy(-1.0, other); }

HybridFunction& HybridFunction::operator*=(double alpha) {
    for (Atom& a : atoms_) a.mass *= alpha;
    for (double& v : samples_) v *= alpha;
    return *this;
}

HybridFunction HybridFunction::shifted(double by, double factor) const {
    HybridFunction f = *this;
    f.origin_ += by;
    for (Atom& a : f.atoms_) {
        a.location += by;
        a.mass *= factor;
    }
    for (double& v : f.samples_) v *= factor;
    return f;
}

void HybridFunction::truncate_after(double x_end) {
    std::erase_if(atoms_, [&](const Atom& a) { return a.location > x_end + kAlignTol * step_; });
    if (samples_.empty()) return;
    const double pos = (x_end - origin_) / step_;
    if (pos < -kAlignTol) {
        samples_.clear();
        return;
    }
    const auto keep = static_cast<std::size_t>(std::floor(pos + kAlignTol)) + 1;
    if (keep < samples_.size()) samples_.resize(keep);
}

HybridFunction HybridFunction::resampled(double origin0, std::size_t count) const {
    HybridFunction f(domain_, step_);
    f.atoms_ = atoms_;
    f.origin_ = origin0;
    f.samples_.assign(count, 0.0);
    if (samples_.empty()) return f;
    const double d = (origin_ - origin0) / step_;
    const double rounded = std::round(d);
    if (std::abs(d - rounded) < kAlignTol) {
        const auto off = static_cast<long long>(rounded);
        for (std::size_t j = 0; j < samples_.size(); ++j) {
            const long long k = off + static_cast<long long>(j);
            if (k >= 0 && k < static_cast<long long>(count))
                f.samples_[static_cast<std::size_t>(k)] = samples_[j];
        }
    } else {
        for (std::size_t k = 0; k < count; ++k)
            f.samples_[k] = density_at(origin0 + step_ * static_cast<double>(k));
    }
    return f;
}

double HybridFunction::max_abs() const {
    double m = 0.0;
    for (const Atom& a : atoms_) m = std::max(m, std::abs(a.mass));
    for (double v : samples_) m = std::max(m, std::abs(v));
    return m;
}

void HybridFunction::prune_atoms(double tol) {
    std::erase_if(atoms_, [&](const Atom& a) { return std::abs(a.mass) < tol; });
}

void HybridFunction::write_csv(std::ostream& os) const {
    const auto old_precision = os.precision(17);
    os << "kind,x,value\n";
    os << "meta,step," << step_ << "\n";
    os << "meta,domain," << (domain_ == Domain::time ? 0 : 1) << "\n";
    for (const Atom& a : atoms_) os << "atom," << a.location << "," << a.mass << "\n";
    for (std::size_t i = 0; i < samples_.size(); ++i)
        os << "grid," << origin_ + step_ * static_cast<double>(i) << "," << samples_[i] << "\n";
    os.precision(old_precision);
}

HybridFunction HybridFunction::read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("kind,", 0) != 0)
        throw UsageError("hybrid csv: missing header");
    double step = 0.0;
    Domain domain = Domain::time;
    std::vector<Atom> atoms;
    std::vector<double> xs;
    std::vector<double> vs;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string kind;
        std::string a;
        std::string b;
        std::getline(ls, kind, ',');
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        if (kind == "meta" && a == "step") step = std::stod(b);
        else if (kind == "meta" && a == "domain") domain = std::stoi(b) == 0 ? Domain::time : Domain::amount;
        else if (kind == "atom") atoms.push_back({std::stod(a), std::stod(b)});
        else if (kind == "grid") {
            xs.push_back(std::stod(a));
            vs.push_back(std::stod(b));
        } else {
            throw UsageError("hybrid csv: unknown row kind '" + kind + "'");
        }
    }
    HybridFunction f(domain, step);
    for (const Atom& at : atoms) f.add_atom(at.location, at.mass);
    if (!xs.empty()) {
        f.origin_ = xs.front();
        f.samples_ = std::move(vs);
    }
    return f;
}

HybridFunction operator+(HybridFunction a, const HybridFunction& b) { return a += b; }
HybridFunction operator-(HybridFunction a, const HybridFunction& b) { return a -= b; }
HybridFunction operator*(double alpha, HybridFunction f) { return f *= alpha; }

void apply_trapezoid_ends(std::span<double> sums, std::span<const double> a,
                          std::span<const double> b) {
    const long long na = static_cast<long long>(a.size());
    const long long nb = static_cast<long long>(b.size());
    for (long long k = 0; k < static_cast<long long>(sums.size()); ++k) {
        const long long lo = std::max(0LL, k - nb + 1);
        const long long hi = std::min(k, na - 1);
        if (lo > hi) continue;
        sums[static_cast<std::size_t>(k)] -=
            0.5 * (a[static_cast<std::size_t>(lo)] * b[static_cast<std::size_t>(k - lo)] +
                   a[static_cast<std::size_t>(hi)] * b[static_cast<std::size_t>(k - hi)]);
    }
}

std::vector<double> trapezoid_convolution(std::span<const double> a, std::span<const double> b,
                                          double step, std::size_t max_len,
                                          std::vector<double> raw_sums) {
    if (a.empty() || b.empty() || max_len == 0) return {};
    const std::size_t len = std::min(a.size() + b.size() - 1, max_len);
    std::vector<double> c = raw_sums.empty() ? fft::convolve(a, b) : std::move(raw_sums);
    c.resize(len, 0.0);
    apply_trapezoid_ends(c, a, b);
    for (double& v : c) v *= step;
    return c;
}

HybridFunction convolve(const HybridFunction& a, const HybridFunction& b, double x_end) {
    if (a.step() == 0.0) return b.step() == 0.0 ? HybridFunction{} : HybridFunction(b.domain(), b.step());
    if (b.step() == 0.0) return HybridFunction(a.domain(), a.step());
    if (a.domain() != b.domain()) throw UsageError("convolve: domain mismatch");
    if (std::abs(a.step() - b.step()) > 1e-12 * a.step())
        throw UsageError("convolve: grid step mismatch");
    const double step = a.step();
    HybridFunction out(a.domain(), step);
    if (a.has_grid() && b.has_grid()) {
        const double origin = a.origin() + b.origin();
        std::size_t max_len = std::numeric_limits<std::size_t>::max();
        if (std::isfinite(x_end)) {
            const double pos = (x_end - origin) / step;
            max_len = pos < 0.0 ? 0 : static_cast<std::size_t>(std::floor(pos + kAlignTol)) + 1;
        }
        auto c = trapezoid_convolution(a.samples(), b.samples(), step, max_len);
        if (!c.empty()) out = HybridFunction::from_samples(a.domain(), origin, step, std::move(c));
    }
    for (const Atom& x : a.atoms()) {
        for (const Atom& y : b.atoms()) out.add_atom(x.location + y.location, x.mass * y.mass);
        if (b.has_grid()) {
            HybridFunction s = HybridFunction::from_samples(b.domain(), b.origin(), step,
                                                            std::vector<double>(b.samples().begin(), b.samples().end()));
            s = s.shifted(x.location, x.mass);
            if (std::isfinite(x_end)) s.truncate_after(x_end);
            out += s;
        }
    }
    if (a.has_grid()) {
        for (const Atom& y : b.atoms()) {
            HybridFunction s = HybridFunction::from_samples(a.domain(), a.origin(), step,
                                                            std::vector<double>(a.samples().begin(), a.samples().end()));
            s = s.shifted(y.location, y.mass);
            if (std::isfinite(x_end)) s.truncate_after(x_end);
            out += s;
        }
    }
    if (std::isfinite(x_end)) out.truncate_after(x_end);
    return out;
}

}  // namespace refract
