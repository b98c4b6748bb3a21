// Objective signal-quality metrics standing in for recognizer-based scoring.
#pragma once

#include <cstddef>
#include <span>

#include "enhance/signal.h"

namespace enhance {

struct MetricReport {
  double si_sdr_db = 0.0;
  double si_sdr_improvement_db = 0.0;  // vs reference-channel passthrough
  double seg_snr_db = 0.0;             // mean segmental SNR, 32 ms windows
  double noise_reduction_db = 0.0;     // context-span input/output power ratio
};

// Scale-invariant SDR, clamped to [-80, +80] dB. Throws on a zero reference.
double si_sdr(std::span<const double> estimate, std::span<const double> reference);

// Per-window SNR clamped to [-10, 35] dB, averaged over windows whose
// reference power is above -60 dBFS. Throws when no window is active.
double segmental_snr(std::span<const double> estimate, std::span<const double> reference,
                     int sample_rate, double window_ms = 32.0);

// Best integer alignment of `estimate` against `reference` within
// +-max_lag samples, by cross-correlation. Positive lag means the estimate
// is late.
int best_alignment(std::span<const double> estimate, std::span<const double> reference,
                   std::size_t max_lag);

// Full report for one enhancement run. `enhanced` covers the
// [hotword_start, query_end) span. The passthrough baseline is the mixture
// reference channel pushed through the identical STFT round trip, so
// framing effects cancel out of the improvement. Both signals are
// delay-compensated against the clean reference within +-fft_size samples.
MetricReport evaluate_run(std::span<const double> enhanced, const MultiChannelWave& clean_target,
                          const MultiChannelWave& mixture, const UtteranceSegmentation& seg,
                          const FrameParams& params, std::size_t ref_channel,
                          double noise_reduction_db);

}  // namespace enhance
