// Speech Cleaner: per-subband multichannel adaptive noise canceller. An
// (M-1) x L tapped-delay-line filter per bin is RLS-trained on the noise
// context to predict the reference channel, frozen at hotword onset, and
// the frozen taps are applied across hotword and query.
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "enhance/signal.h"

namespace enhance {

struct CleanerConfig {
  std::size_t taps = 3;               // L
  double forgetting = 0.9995;         // lambda
  double delta = 1e-2;                // P0 = delta^-1 I
  std::size_t reference_channel = 0;  // the channel the filter predicts
};

// Ring of the last L frames of auxiliary-channel spectra,
// Y_m(n), Y_m(n-1), ..., Y_m(n-L+1) per bin.
class DelayLine {
 public:
  DelayLine(std::size_t aux_channels, std::size_t bins, std::size_t taps);

  // Pushes the auxiliary channels of one spectrogram frame (every channel
  // except `ref_channel`, in ascending channel order).
  void push(const MultiChannelSpectrogram& spec, std::size_t frame, std::size_t ref_channel);

  // Value lagged by `lag` frames (0 = current) for auxiliary channel `aux`.
  cplx tap(std::size_t aux, std::size_t bin, std::size_t lag) const;

  // Stacked regressor for one bin: aux-major, lag-minor, length aux * L.
  void regressor(std::size_t bin, std::span<cplx> out) const;

  std::size_t aux_channels() const { return aux_; }
  std::size_t taps() const { return taps_; }
  void reset();

 private:
  std::size_t aux_, bins_, taps_, head_ = 0;
  std::vector<cplx> ring_;  // [slot][aux][bin]
};

class CleanerFilterBank {
 public:
  CleanerFilterBank(std::size_t channels, std::size_t bins, CleanerConfig config);

  // Z(k,n) = Y_ref(k,n) - sum_m U_m(k)^H Ytilde_m(k,n). The delay line must
  // already contain the current frame's auxiliary values.
  void output(const DelayLine& delay, std::span<const cplx> ref_bins, std::span<cplx> out) const;

  // Exponentially-weighted RLS over the context range, frames strictly in
  // time order. Delay lines are seeded from the frames preceding the range
  // when they exist, zeros otherwise. Throws "filter frozen" after freeze().
  void adapt(const MultiChannelSpectrogram& spec, FrameRange context);

  // Marks taps immutable and discards the RLS state. Idempotent.
  void freeze();
  bool frozen() const { return frozen_; }

  // Applies the frozen taps over the given frames, emitting a one-channel
  // spectrogram of the range. Throws on an unfrozen bank.
  MultiChannelSpectrogram apply(const MultiChannelSpectrogram& spec, FrameRange frames) const;

  std::size_t channels() const { return channels_; }
  std::size_t bins() const { return bins_; }
  const CleanerConfig& config() const { return config_; }

  // Tap U_m(k, l); m indexes auxiliary channels.
  cplx tap(std::size_t bin, std::size_t aux, std::size_t lag) const;
  std::span<const cplx> taps_flat() const { return taps_; }
  void set_taps(std::span<const cplx> taps);  // throws if frozen

  // Minimum eigenvalue of P(k) across bins; positive while the inverse
  // correlation state is healthy. Throws once the state is discarded.
  double min_p_eigenvalue() const;

 private:
  std::size_t channels_, bins_, dim_;  // dim = (M-1) * L
  CleanerConfig config_;
  bool frozen_ = false;
  std::vector<cplx> taps_;  // [bin][aux][lag]
  std::vector<cplx> p_;     // [bin][dim][dim]
};

// Frozen tap sidecar: u32 bin count, u32 auxiliary channel count, u32 tap
// length, then bins x (M-1) x L interleaved real/imag little-endian f64.
void write_taps(const std::string& path, const CleanerFilterBank& bank);
void read_taps(const std::string& path, CleanerFilterBank& bank);

}  // namespace enhance
