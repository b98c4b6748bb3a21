// Deterministic test-signal generators for the synthetic scene harness.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace enhance {

double rms(std::span<const double> x);
void normalize_rms(std::span<double> x, double target_rms);

std::vector<double> white_noise(std::uint64_t seed, std::size_t n);

// White noise shaped by a 63-tap FIR approximating -10 dB/decade.
std::vector<double> pink_noise(std::uint64_t seed, std::size_t n, int sample_rate = 16000);

// Stationary noise with a long-term-speech-like spectrum: flat through the
// low formant region, then rolling off about -9 dB/octave.
std::vector<double> speech_shaped_noise(std::uint64_t seed, std::size_t n, int sample_rate = 16000);

// Voiced harmonic complex with drifting pitch and syllabic amplitude
// modulation; stands in for a talker. Unit RMS before any scene scaling.
std::vector<double> speech_like(std::uint64_t seed, std::size_t n, int sample_rate = 16000);

// Tone burst, handy for exactness tests.
std::vector<double> sinusoid(double frequency_hz, std::size_t n, int sample_rate = 16000,
                             double amplitude = 1.0);

}  // namespace enhance
