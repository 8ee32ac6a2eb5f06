#include "mbsc/dft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mbsc {

namespace {

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative Cooley-Tukey, no normalization.
void fft_radix2(cvec& a, bool inverse) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

cvec dft_direct(const cvec& x, bool inverse) {
    const size_t n = x.size();
    cvec out(n);
    const double sign = inverse ? 2.0 : -2.0;
    for (size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (size_t m = 0; m < n; ++m) {
            // Reduce k*m mod n first so the angle stays small for long inputs.
            const double ang = sign * std::numbers::pi *
                               static_cast<double>((k * m) % n) / static_cast<double>(n);
            acc += x[m] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

} // namespace

cvec dft_complex(const cvec& x, bool inverse) {
    if (x.empty()) throw std::invalid_argument("dft_complex: empty input");
    cvec out;
    if (is_pow2(x.size())) {
        out = x;
        fft_radix2(out, inverse);
    } else {
        out = dft_direct(x, inverse);
    }
    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(x.size());
        for (auto& c : out) c *= inv_n;
    }
    return out;
}

cvec dft_forward(const std::vector<double>& x) {
    if (x.empty()) throw std::invalid_argument("dft_forward: empty input");
    cvec cx(x.size());
    for (size_t i = 0; i < x.size(); ++i) cx[i] = std::complex<double>(x[i], 0.0);
    return dft_complex(cx, false);
}

std::vector<double> dft_inverse(const cvec& X, double symmetry_tol) {
    if (X.empty()) throw std::invalid_argument("dft_inverse: empty input");
    const size_t n = X.size();

    double max_mag = 0.0;
    for (const auto& c : X) max_mag = std::max(max_mag, std::abs(c));
    const double tol = symmetry_tol * std::max(max_mag, 1.0);

    if (std::abs(X[0].imag()) > tol)
        throw std::invalid_argument("dft_inverse: DC bin is not real");
    if (n % 2 == 0 && std::abs(X[n / 2].imag()) > tol)
        throw std::invalid_argument("dft_inverse: Nyquist bin is not real");
    for (size_t k = 1; k < n - k; ++k) {
        if (std::abs(X[k] - std::conj(X[n - k])) > tol)
            throw std::invalid_argument("dft_inverse: spectrum is not conjugate symmetric");
    }

    const cvec t = dft_complex(X, true);
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = t[i].real();
    return out;
}

} // namespace mbsc
