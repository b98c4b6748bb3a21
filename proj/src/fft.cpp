#include "enhance/fft.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace enhance::fft {

namespace {

void bit_reverse_permute(std::vector<cplx>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
}

}  // namespace

void transform(std::vector<cplx>& data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) throw std::invalid_argument("fft size must be a power of two");
  if (n == 1) return;

  bit_reverse_permute(data);

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const cplx u = data[i + j];
        const cplx v = data[i + j + len / 2] * w;
        data[i + j] = u + v;
        data[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : data) x *= scale;
  }
}

namespace {

// Unit-circle table e^{-j 2 pi k / n} for k = 0..n/2, cached per size.
const std::vector<cplx>& twiddles_for(std::size_t n) {
  thread_local std::size_t cached_n = 0;
  thread_local std::vector<cplx> table;
  if (cached_n != n) {
    table.resize(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      table[k] = cplx(std::cos(ang), std::sin(ang));
    }
    cached_n = n;
  }
  return table;
}

}  // namespace

// Real-input transform through a half-size complex FFT: even samples pack
// into the real part, odd samples into the imaginary part.
std::vector<cplx> real_forward(std::span<const double> block) {
  const std::size_t n = block.size();
  if (n < 2 || !is_power_of_two(n)) throw std::invalid_argument("fft size must be a power of two >= 2");
  const std::size_t half = n / 2;

  thread_local std::vector<cplx> packed;
  packed.resize(half);
  for (std::size_t i = 0; i < half; ++i) packed[i] = cplx(block[2 * i], block[2 * i + 1]);
  transform(packed, false);

  const auto& w = twiddles_for(n);
  std::vector<cplx> bins(half + 1);
  for (std::size_t k = 0; k <= half; ++k) {
    const cplx zk = packed[k % half];
    const cplx zc = std::conj(packed[(half - k) % half]);
    const cplx even = 0.5 * (zk + zc);
    const cplx odd = cplx(0.0, -0.5) * (zk - zc);
    bins[k] = even + w[k] * odd;
  }
  // Nyquist twiddle wraps above; recompute the endpoints exactly.
  bins.front() = cplx(packed[0].real() + packed[0].imag(), 0.0);
  bins.back() = cplx(packed[0].real() - packed[0].imag(), 0.0);
  return bins;
}

std::vector<double> real_inverse(std::span<const cplx> bins, std::size_t n) {
  if (bins.size() != n / 2 + 1) throw std::invalid_argument("spectrum size inconsistent with block size");
  if (n < 2 || !is_power_of_two(n)) throw std::invalid_argument("fft size must be a power of two >= 2");
  const std::size_t half = n / 2;

  const auto& w = twiddles_for(n);
  thread_local std::vector<cplx> packed;
  packed.resize(half);
  for (std::size_t k = 0; k < half; ++k) {
    const cplx xk = bins[k];
    const cplx xc = std::conj(bins[half - k]);
    const cplx even = 0.5 * (xk + xc);
    const cplx odd = 0.5 * (xk - xc) * std::conj(w[k]);  // divide by e^{-j2pik/n}
    packed[k] = even + cplx(0.0, 1.0) * odd;
  }
  transform(packed, true);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < half; ++i) {
    out[2 * i] = packed[i].real();
    out[2 * i + 1] = packed[i].imag();
  }
  return out;
}

}  // namespace enhance::fft
