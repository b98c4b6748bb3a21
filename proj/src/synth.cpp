#include "enhance/synth.h"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace enhance {

namespace {

constexpr std::size_t kShapingTaps = 63;

// Linear-phase FIR matching a target magnitude response, by numeric inverse
// DTFT plus a Hann taper.
template <typename MagFn>
std::vector<double> fir_from_magnitude(MagFn&& magnitude, std::size_t taps, int sample_rate) {
  const double nyquist = sample_rate / 2.0;
  const std::size_t grid = 2048;
  const double center = (static_cast<double>(taps) - 1.0) / 2.0;
  std::vector<double> h(taps, 0.0);
  for (std::size_t i = 0; i < taps; ++i) {
    const double m = static_cast<double>(i) - center;
    double acc = 0.0;
    for (std::size_t g = 0; g < grid; ++g) {
      const double w = std::numbers::pi * (static_cast<double>(g) + 0.5) / static_cast<double>(grid);
      acc += magnitude(w / std::numbers::pi * nyquist) * std::cos(w * m);
    }
    h[i] = acc / static_cast<double>(grid);
    const double taper = 0.5 + 0.5 * std::cos(std::numbers::pi * m / (center + 1.0));
    h[i] *= taper;
  }
  return h;
}

std::vector<double> convolve_same(const std::vector<double>& x, const std::vector<double>& h) {
  std::vector<double> y(x.size(), 0.0);
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(h.size() / 2);
  for (std::size_t t = 0; t < x.size(); ++t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) {
      const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(t) + half - static_cast<std::ptrdiff_t>(j);
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(x.size())) acc += h[j] * x[static_cast<std::size_t>(idx)];
    }
    y[t] = acc;
  }
  return y;
}

}  // namespace

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return std::sqrt(sum / static_cast<double>(x.size()));
}

void normalize_rms(std::span<double> x, double target_rms) {
  const double current = rms(x);
  if (current <= 0.0) throw std::invalid_argument("cannot normalize a silent signal");
  const double gain = target_rms / current;
  for (double& v : x) v *= gain;
}

std::vector<double> white_noise(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = gauss(rng);
  return x;
}

std::vector<double> pink_noise(std::uint64_t seed, std::size_t n, int sample_rate) {
  const auto shaping = fir_from_magnitude(
      [](double f) { return 1.0 / std::sqrt(std::max(f, 20.0)); }, kShapingTaps, sample_rate);
  auto x = convolve_same(white_noise(seed, n), shaping);
  if (!x.empty()) normalize_rms(x, 1.0);
  return x;
}

std::vector<double> speech_shaped_noise(std::uint64_t seed, std::size_t n, int sample_rate) {
  const auto shaping = fir_from_magnitude(
      [](double f) {
        const double low = std::min(f / 120.0, 1.0);          // roll off the rumble
        const double high = f <= 500.0 ? 1.0 : std::pow(500.0 / f, 1.5);  // ~ -9 dB/oct
        return low * high;
      },
      kShapingTaps, sample_rate);
  auto x = convolve_same(white_noise(seed, n), shaping);
  if (!x.empty()) normalize_rms(x, 1.0);
  return x;
}

std::vector<double> speech_like(std::uint64_t seed, std::size_t n, int sample_rate) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double f0_base = 105.0 + 60.0 * unit(rng);
  const double drift_rate = 0.6 + 0.8 * unit(rng);
  const double syllable_rate = 2.6 + 1.0 * unit(rng);
  const double drift_phase = 2.0 * std::numbers::pi * unit(rng);
  const double syllable_phase = 2.0 * std::numbers::pi * unit(rng);
  std::normal_distribution<double> gauss(0.0, 1.0);

  constexpr std::size_t kHarmonics = 24;
  std::array<double, kHarmonics> phases{};
  for (auto& p : phases) p = 2.0 * std::numbers::pi * unit(rng);

  std::vector<double> x(n, 0.0);
  const double dt = 1.0 / static_cast<double>(sample_rate);
  for (std::size_t t = 0; t < n; ++t) {
    const double time = static_cast<double>(t) * dt;
    const double f0 = f0_base * (1.0 + 0.06 * std::sin(2.0 * std::numbers::pi * drift_rate * time + drift_phase));
    const double envelope =
        0.7 + 0.3 * std::sin(2.0 * std::numbers::pi * syllable_rate * time + syllable_phase);
    double sample = 0.0;
    for (std::size_t h = 0; h < kHarmonics; ++h) {
      const double freq = f0 * static_cast<double>(h + 1);
      if (freq > 0.45 * sample_rate || freq > 3800.0) break;
      phases[h] += 2.0 * std::numbers::pi * freq * dt;
      sample += std::sin(phases[h]) / std::pow(static_cast<double>(h + 1), 1.2);
    }
    x[t] = envelope * sample + 0.01 * gauss(rng);
  }
  if (!x.empty()) normalize_rms(x, 1.0);
  return x;
}

std::vector<double> sinusoid(double frequency_hz, std::size_t n, int sample_rate, double amplitude) {
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) {
    x[t] = amplitude * std::sin(2.0 * std::numbers::pi * frequency_hz * static_cast<double>(t) /
                                static_cast<double>(sample_rate));
  }
  return x;
}

}  // namespace enhance
