// Context Aware Beamformer: per-bin spatial covariance estimation from the
// hotword and noise-context segments, covariance subtraction, principal
// eigenvector steering, and streaming application of the weights.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "enhance/signal.h"

namespace enhance {

enum class CovarianceKind { Noisy, Noise, Desired, Oracle };

// Per-frequency-bin M x M Hermitian matrix set.
struct SubbandCovariance {
  std::size_t channels = 0;
  std::size_t bins = 0;
  CovarianceKind kind = CovarianceKind::Noisy;
  std::size_t frame_count_used = 0;
  std::vector<cplx> mats;  // bin-major, row-major M x M per bin

  cplx& at(std::size_t bin, std::size_t r, std::size_t c) {
    return mats[(bin * channels + r) * channels + c];
  }
  const cplx& at(std::size_t bin, std::size_t r, std::size_t c) const {
    return mats[(bin * channels + r) * channels + c];
  }
  double trace(std::size_t bin) const;
};

// Per-bin unit-norm steering weights, applied as conj(W) . Y.
struct BeamformerWeights {
  std::size_t channels = 0;
  std::size_t bins = 0;
  std::string normalization = "ref_channel_phase";
  std::vector<cplx> w;                  // bins x M
  std::vector<std::uint8_t> degenerate; // per-bin passthrough fallback flag

  cplx& at(std::size_t bin, std::size_t m) { return w[bin * channels + m]; }
  const cplx& at(std::size_t bin, std::size_t m) const { return w[bin * channels + m]; }
};

// Average of Y(k,n) Y(k,n)^H over the frame range. Requires M >= 2.
SubbandCovariance estimate_covariance(const MultiChannelSpectrogram& spec, FrameRange frames,
                                      CovarianceKind kind = CovarianceKind::Noisy);

// Identical computation on the isolated desired-signal rendering.
SubbandCovariance oracle_covariance(const MultiChannelSpectrogram& clean_spec, FrameRange frames);

// Eigenvalue clipping at zero: the Frobenius-nearest PSD matrix, per bin.
SubbandCovariance project_psd(const SubbandCovariance& cov);

// Per-bin difference noisy - noise, PSD-projected. Kinds must be Noisy/Noise.
SubbandCovariance subtract_covariance(const SubbandCovariance& noisy, const SubbandCovariance& noise);

// Per-bin top eigenvector by power iteration (max 200 iterations, relative
// eigenvalue change < 1e-12). Bins with trace < degenerate_ratio x mean
// trace fall back to passthrough weights e1 and are flagged degenerate.
// Phase is anchored so the reference-channel entry is real non-negative;
// when that entry is tiny (< 0.1 x the largest magnitude) the anchor moves
// to the largest-magnitude entry, ties broken by lowest channel index.
BeamformerWeights principal_eigenvector(const SubbandCovariance& cov,
                                        double degenerate_ratio = 1e-12);

// X_hat(k,n) = W(k)^H Y(k,n), frame-local.
MultiChannelSpectrogram apply_beamformer(const BeamformerWeights& weights,
                                         const MultiChannelSpectrogram& spec);

// Frost-style constrained LMS: one normalized-gradient update per frame
// minimizing output power subject to W(k)^H d(k) = 1, with d(k) the initial
// steering vector; the constraint is re-projected after every update. Bins
// whose noise covariance is degenerate (or flagged degenerate in the input
// weights) are left untouched. Disabled by default in the pipeline.
BeamformerWeights adapt_lms_mvdr(const BeamformerWeights& weights, const MultiChannelSpectrogram& spec,
                                 FrameRange frames, double step, const SubbandCovariance& noise_cov);

// Binary sidecar: u32 bin count, u32 channel count, then bins x M
// interleaved real/imag little-endian f64.
void write_weights(const std::string& path, const BeamformerWeights& weights);
BeamformerWeights read_weights(const std::string& path);

}  // namespace enhance
