// Radix-2 FFT kernel used by the STFT front end. Power-of-two sizes only.
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace enhance {

using cplx = std::complex<double>;

namespace fft {

constexpr bool is_power_of_two(std::size_t n) {
  return n != 0 && (n & (n - 1)) == 0;
}

// In-place iterative radix-2 transform. Inverse applies the 1/N scaling.
void transform(std::vector<cplx>& data, bool inverse);

// One-sided spectrum of a real block: n/2 + 1 bins. Bin 0 and the Nyquist
// bin are forced to zero imaginary part.
std::vector<cplx> real_forward(std::span<const double> block);

// Inverse of real_forward: expands conjugate symmetry back to n samples.
std::vector<double> real_inverse(std::span<const cplx> bins, std::size_t n);

}  // namespace fft
}  // namespace enhance
