#ifndef MBSC_DFT_HPP
#define MBSC_DFT_HPP

#include <complex>
#include <vector>

namespace mbsc {

using cvec = std::vector<std::complex<double>>;

// Two-sided DFT of a real sequence: X[k] = sum_n x[n] exp(-i 2 pi k n / N).
// All N bins are returned, so real inputs come back conjugate-symmetric.
// Radix-2 FFT when N is a power of two, direct evaluation otherwise.
// Throws std::invalid_argument on empty input.
cvec dft_forward(const std::vector<double>& x);

// Inverse DFT back to a real sequence. The input must be conjugate
// symmetric (X[k] == conj(X[N-k]) and real at DC / Nyquist) within
// `symmetry_tol` relative to the largest bin magnitude; otherwise throws
// std::invalid_argument. Tolerance is absolute when the spectrum is zero.
std::vector<double> dft_inverse(const cvec& X, double symmetry_tol = 1e-9);

// Complex-to-complex transform used by the real wrappers and by spectral
// gradients. `inverse` applies the conjugate transform and divides by N.
cvec dft_complex(const cvec& x, bool inverse);

} // namespace mbsc

#endif
