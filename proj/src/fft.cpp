#include "refract/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>

namespace refract::fft {

namespace {

struct Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

// FFTW planning is not thread safe; execution with the new-array interface is.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

const Plans& plans_for(std::size_t n) {
    static std::map<std::size_t, Plans> cache;
    std::lock_guard lock(plan_mutex());
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    Plans p;
    const int len = static_cast<int>(n);
    p.forward = fftw_plan_dft_r2c_1d(len, in, out, FFTW_ESTIMATE);
    p.backward = fftw_plan_dft_c2r_1d(len, out, in, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    return cache.emplace(n, p).first->second;
}

}  // namespace

std::size_t padded_size(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::size_t good_size(std::size_t n) {
    for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
        std::size_t r = m;
        for (std::size_t f : {2u, 3u, 5u})
            while (r % f == 0) r /= f;
        if (r == 1) return m;
    }
}

Spectrum::Spectrum(std::span<const double> samples, std::size_t size) : size_(size) {
    const Plans& p = plans_for(size);
    double* in = fftw_alloc_real(size);
    fftw_complex* out = fftw_alloc_complex(size / 2 + 1);
    std::fill(in, in + size, 0.0);
    std::copy_n(samples.begin(), std::min(samples.size(), size), in);
    fftw_execute_dft_r2c(p.forward, in, out);
    bins_.resize(size / 2 + 1);
    for (std::size_t k = 0; k < bins_.size(); ++k) bins_[k] = {out[k][0], out[k][1]};
    fftw_free(in);
    fftw_free(out);
}

ProductAccumulator::ProductAccumulator(std::size_t size) : size_(size), acc_(size / 2 + 1) {}

void ProductAccumulator::add(const Spectrum& a, const Spectrum& b, double weight) {
    if (a.empty() || b.empty()) return;
    touched_ = true;
    const auto& x = a.bins();
    const auto& y = b.bins();
    for (std::size_t k = 0; k < acc_.size(); ++k) acc_[k] += weight * x[k] * y[k];
}

std::vector<double> ProductAccumulator::result(std::size_t length) const {
    std::vector<double> out(std::min(length, size_), 0.0);
    if (!touched_) return out;
    const Plans& p = plans_for(size_);
    fftw_complex* in = fftw_alloc_complex(size_ / 2 + 1);
    double* real = fftw_alloc_real(size_);
    for (std::size_t k = 0; k < acc_.size(); ++k) {
        in[k][0] = acc_[k].real();
        in[k][1] = acc_[k].imag();
    }
    fftw_execute_dft_c2r(p.backward, in, real);
    const double scale = 1.0 / static_cast<double>(size_);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = real[k] * scale;
    fftw_free(in);
    fftw_free(real);
    return out;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) return {};
    const std::size_t len = a.size() + b.size() - 1;
    if (a.size() * b.size() <= 65536) {
        std::vector<double> c(len, 0.0);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
        return c;
    }
    const std::size_t n = padded_size(len);
    ProductAccumulator acc(n);
    acc.add(Spectrum(a, n), Spectrum(b, n), 1.0);
    return acc.result(len);
}

}  // namespace refract::fft
