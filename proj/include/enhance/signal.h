// Multichannel time-domain and STFT-domain containers plus the
// analysis/synthesis transforms shared by every enhancement stage.
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "enhance/fft.h"

namespace enhance {

// Per-channel PCM at full scale +-1.0. Channels share one length.
struct MultiChannelWave {
  std::vector<std::vector<double>> samples;  // [channel][sample]
  int sample_rate = 16000;

  std::size_t channel_count() const { return samples.size(); }
  std::size_t length() const { return samples.empty() ? 0 : samples.front().size(); }

  std::span<const double> channel(std::size_t m) const { return samples.at(m); }

  // Throws unless every channel has the same length and M >= 1.
  void validate() const;
};

struct FrameParams {
  std::size_t fft_size = 512;
  std::size_t hop_size = 256;
  std::string window = "sqrt_hann";  // sqrt_hann | hann | rect

  std::size_t bin_count() const { return fft_size / 2 + 1; }

  // Throws "invalid frame params" on a non-power-of-two fft size, a hop
  // that does not divide the fft size, an unknown window name, or an
  // analysis/synthesis pair that is not constant-overlap-add at this hop.
  void validate() const;
};

// Sampled analysis (and synthesis; the pair is identical) window.
std::vector<double> make_window(const FrameParams& params);

// Max relative deviation of the overlapped window-product sum from its
// interior mean. Zero (to rounding) for a COLA-compliant pair.
double cola_deviation(const FrameParams& params);

// One-sided STFT frames, indexed (channel, frame, bin).
struct MultiChannelSpectrogram {
  FrameParams params;
  std::size_t channels = 0;
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;
  std::vector<cplx> data;  // ((ch * n_frames) + frame) * n_bins + bin

  cplx& at(std::size_t ch, std::size_t frame, std::size_t bin) {
    return data[(ch * n_frames + frame) * n_bins + bin];
  }
  const cplx& at(std::size_t ch, std::size_t frame, std::size_t bin) const {
    return data[(ch * n_frames + frame) * n_bins + bin];
  }
  std::span<const cplx> frame(std::size_t ch, std::size_t f) const {
    return {data.data() + (ch * n_frames + f) * n_bins, n_bins};
  }
  std::span<cplx> frame(std::size_t ch, std::size_t f) {
    return {data.data() + (ch * n_frames + f) * n_bins, n_bins};
  }
};

// Half-open frame-index interval.
struct FrameRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool empty() const { return end <= begin; }
};

// Sample-indexed utterance layout: noise context, hotword, query.
struct UtteranceSegmentation {
  std::size_t context_start = 0;
  std::size_t context_end = 0;   // == hotword_start
  std::size_t hotword_start = 0;
  std::size_t hotword_end = 0;
  std::size_t query_end = 0;

  void validate() const;
};

struct SegmentFrames {
  FrameRange context;
  FrameRange hotword;
  FrameRange query;

  FrameRange hotword_query() const { return {hotword.begin, query.end}; }
};

// Number of analysis frames covering `length` samples; the tail frame is
// zero-padded so no sample is dropped.
std::size_t frame_count_for(std::size_t length, const FrameParams& params);

MultiChannelSpectrogram stft(const MultiChannelWave& wave, const FrameParams& params);

// Overlap-add synthesis with per-sample window-power normalization.
// Output length is (frame_count - 1) * hop + fft_size.
MultiChannelWave istft(const MultiChannelSpectrogram& spec);

// Assigns each frame to the segment containing its center sample
// (frame_start + fft_size / 2). Throws "segment too short" if a segment
// holds no frame center.
SegmentFrames segment_frames(const UtteranceSegmentation& seg, const FrameParams& params);

// Copies a frame interval into a standalone spectrogram.
MultiChannelSpectrogram slice_frames(const MultiChannelSpectrogram& spec, FrameRange range);

// Copies one channel of a frame interval into a single-channel spectrogram.
MultiChannelSpectrogram slice_channel_frames(const MultiChannelSpectrogram& spec, std::size_t channel,
                                             FrameRange range);

// Overlap-add synthesis of channel 0 of `spec`, whose frame 0 sits at
// original frame index `first_frame_index`, trimmed to the sample span
// [span_begin, span_end). Samples the frames do not cover come back zero.
std::vector<double> synthesize_span(const MultiChannelSpectrogram& spec, std::size_t first_frame_index,
                                    std::size_t span_begin, std::size_t span_end);

}  // namespace enhance
