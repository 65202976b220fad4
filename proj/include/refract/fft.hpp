#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace refract::fft {

/// Smallest power of two >= n.
std::size_t padded_size(std::size_t n);

/// Smallest n' >= n of the form 2^a 3^b 5^c (fast sizes for FFTW).
std::size_t good_size(std::size_t n);

/// Real-to-complex spectrum of a sequence zero-padded to `size`.
class Spectrum {
public:
    Spectrum() = default;
    Spectrum(std::span<const double> samples, std::size_t size);

    std::size_t size() const { return size_; }
    bool empty() const { return bins_.empty(); }
    const std::vector<std::complex<double>>& bins() const { return bins_; }

private:
    std::size_t size_ = 0;
    std::vector<std::complex<double>> bins_;
};

/// Accumulates sums of spectrum products and returns the real linear-convolution sums.
class ProductAccumulator {
public:
    explicit ProductAccumulator(std::size_t size);

    void add(const Spectrum& a, const Spectrum& b, double weight);
    bool empty() const { return !touched_; }
    /// Inverse transform; element k is sum_j a_j b_{k-j} over the accumulated products.
    std::vector<double> result(std::size_t length) const;

private:
    std::size_t size_;
    bool touched_ = false;
    std::vector<std::complex<double>> acc_;
};

/// Plain linear convolution sums c_k = sum_j a_j b_{k-j}, k < a.size()+b.size()-1.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

}  // namespace refract::fft
