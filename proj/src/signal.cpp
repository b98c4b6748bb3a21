#include "enhance/signal.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace enhance {

void MultiChannelWave::validate() const {
  if (samples.empty()) throw std::invalid_argument("empty input");
  const std::size_t len = samples.front().size();
  for (const auto& ch : samples) {
    if (ch.size() != len) throw std::invalid_argument("channel lengths differ");
  }
}

std::vector<double> make_window(const FrameParams& params) {
  const std::size_t n = params.fft_size;
  std::vector<double> w(n);
  if (params.window == "rect") {
    std::fill(w.begin(), w.end(), 1.0);
    return w;
  }
  // Periodic Hann, so the 50%-overlap sums close exactly.
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  if (params.window == "sqrt_hann") {
    for (auto& v : w) v = std::sqrt(v);
  } else if (params.window != "hann") {
    throw std::invalid_argument("invalid frame params: unknown window '" + params.window + "'");
  }
  return w;
}

double cola_deviation(const FrameParams& params) {
  const auto w = make_window(params);
  const std::size_t n = params.fft_size;
  const std::size_t hop = params.hop_size;
  // Product sum at offsets 0..hop-1, folded over all overlapping frames.
  std::vector<double> sum(hop, 0.0);
  for (std::size_t start = 0; start < n; start += hop) {
    for (std::size_t i = 0; i < hop; ++i) sum[i] += w[start + i] * w[start + i];
  }
  double mean = 0.0;
  for (double v : sum) mean += v;
  mean /= static_cast<double>(hop);
  if (mean <= 0.0) return 1.0;
  double worst = 0.0;
  for (double v : sum) worst = std::max(worst, std::abs(v - mean) / mean);
  return worst;
}

void FrameParams::validate() const {
  if (!fft::is_power_of_two(fft_size)) throw std::invalid_argument("invalid frame params: fft size must be a power of two");
  if (hop_size == 0 || fft_size % hop_size != 0) {
    throw std::invalid_argument("invalid frame params: hop must divide fft size");
  }
  make_window(*this);
  if (cola_deviation(*this) > 1e-9) {
    throw std::invalid_argument("invalid frame params: window pair is not constant-overlap-add at this hop");
  }
}

std::size_t frame_count_for(std::size_t length, const FrameParams& params) {
  if (length <= params.fft_size) return 1;
  const std::size_t over = length - params.fft_size;
  return (over + params.hop_size - 1) / params.hop_size + 1;
}

MultiChannelSpectrogram stft(const MultiChannelWave& wave, const FrameParams& params) {
  wave.validate();
  params.validate();
  if (wave.length() == 0) throw std::invalid_argument("empty input");

  const auto window = make_window(params);
  const std::size_t n_frames = frame_count_for(wave.length(), params);

  MultiChannelSpectrogram spec;
  spec.params = params;
  spec.channels = wave.channel_count();
  spec.n_frames = n_frames;
  spec.n_bins = params.bin_count();
  spec.data.resize(spec.channels * n_frames * spec.n_bins);

  std::vector<double> block(params.fft_size);
  for (std::size_t ch = 0; ch < spec.channels; ++ch) {
    const auto& x = wave.samples[ch];
    for (std::size_t f = 0; f < n_frames; ++f) {
      const std::size_t start = f * params.hop_size;
      for (std::size_t i = 0; i < params.fft_size; ++i) {
        const std::size_t t = start + i;
        block[i] = (t < x.size() ? x[t] : 0.0) * window[i];
      }
      const auto bins = fft::real_forward(block);
      std::copy(bins.begin(), bins.end(), spec.frame(ch, f).begin());
    }
  }
  return spec;
}

MultiChannelWave istft(const MultiChannelSpectrogram& spec) {
  if (spec.channels == 0 || spec.n_frames == 0) throw std::invalid_argument("empty spectrogram");
  if (spec.n_bins != spec.params.bin_count()) throw std::invalid_argument("bin count inconsistent with frame params");

  const auto window = make_window(spec.params);
  const std::size_t hop = spec.params.hop_size;
  const std::size_t n = spec.params.fft_size;
  const std::size_t out_len = (spec.n_frames - 1) * hop + n;

  // Window-power normalization shared by all channels.
  std::vector<double> weight(out_len, 0.0);
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    const std::size_t start = f * hop;
    for (std::size_t i = 0; i < n; ++i) weight[start + i] += window[i] * window[i];
  }

  MultiChannelWave wave;
  wave.samples.assign(spec.channels, std::vector<double>(out_len, 0.0));
  for (std::size_t ch = 0; ch < spec.channels; ++ch) {
    auto& out = wave.samples[ch];
    for (std::size_t f = 0; f < spec.n_frames; ++f) {
      const auto block = fft::real_inverse(spec.frame(ch, f), n);
      const std::size_t start = f * hop;
      for (std::size_t i = 0; i < n; ++i) out[start + i] += block[i] * window[i];
    }
    for (std::size_t t = 0; t < out_len; ++t) {
      out[t] = weight[t] > 1e-12 ? out[t] / weight[t] : 0.0;
    }
  }
  return wave;
}

void UtteranceSegmentation::validate() const {
  if (!(context_start <= context_end && context_end <= hotword_start && hotword_start < hotword_end &&
        hotword_end <= query_end)) {
    throw std::invalid_argument("segmentation boundaries out of order");
  }
  if (hotword_start != context_end) {
    throw std::invalid_argument("noise context must immediately precede the hotword");
  }
}

namespace {

// Frames whose center sample lies in [lo, hi).
FrameRange frames_with_center_in(std::size_t lo, std::size_t hi, const FrameParams& params) {
  const auto first_at_or_after = [&](std::size_t bound) {
    const std::size_t half = params.fft_size / 2;
    if (bound <= half) return std::size_t{0};
    const std::size_t d = bound - half;
    return (d + params.hop_size - 1) / params.hop_size;
  };
  return {first_at_or_after(lo), first_at_or_after(hi)};
}

}  // namespace

SegmentFrames segment_frames(const UtteranceSegmentation& seg, const FrameParams& params) {
  seg.validate();
  params.validate();

  SegmentFrames out;
  out.context = frames_with_center_in(seg.context_start, seg.context_end, params);
  out.hotword = frames_with_center_in(seg.hotword_start, seg.hotword_end, params);
  out.query = frames_with_center_in(seg.hotword_end, seg.query_end, params);
  if (out.context.empty()) throw std::invalid_argument("segment too short: context holds no frame center");
  if (out.hotword.empty()) throw std::invalid_argument("segment too short: hotword holds no frame center");
  if (out.query.empty()) throw std::invalid_argument("segment too short: query holds no frame center");
  return out;
}

MultiChannelSpectrogram slice_frames(const MultiChannelSpectrogram& spec, FrameRange range) {
  if (range.end > spec.n_frames || range.empty()) throw std::invalid_argument("frame range out of bounds");
  MultiChannelSpectrogram out;
  out.params = spec.params;
  out.channels = spec.channels;
  out.n_frames = range.size();
  out.n_bins = spec.n_bins;
  out.data.resize(out.channels * out.n_frames * out.n_bins);
  for (std::size_t ch = 0; ch < out.channels; ++ch) {
    for (std::size_t f = 0; f < out.n_frames; ++f) {
      const auto src = spec.frame(ch, range.begin + f);
      std::copy(src.begin(), src.end(), out.frame(ch, f).begin());
    }
  }
  return out;
}

MultiChannelSpectrogram slice_channel_frames(const MultiChannelSpectrogram& spec, std::size_t channel,
                                             FrameRange range) {
  if (channel >= spec.channels) throw std::invalid_argument("channel out of range");
  if (range.end > spec.n_frames || range.empty()) throw std::invalid_argument("frame range out of bounds");
  MultiChannelSpectrogram out;
  out.params = spec.params;
  out.channels = 1;
  out.n_frames = range.size();
  out.n_bins = spec.n_bins;
  out.data.resize(out.n_frames * out.n_bins);
  for (std::size_t f = 0; f < out.n_frames; ++f) {
    const auto src = spec.frame(channel, range.begin + f);
    std::copy(src.begin(), src.end(), out.frame(0, f).begin());
  }
  return out;
}

std::vector<double> synthesize_span(const MultiChannelSpectrogram& spec, std::size_t first_frame_index,
                                    std::size_t span_begin, std::size_t span_end) {
  if (span_end < span_begin) throw std::invalid_argument("bad sample span");
  const MultiChannelWave synth = istft(spec);
  const std::size_t offset = first_frame_index * spec.params.hop_size;
  std::vector<double> out(span_end - span_begin, 0.0);
  const auto& x = synth.samples.front();
  for (std::size_t t = span_begin; t < span_end; ++t) {
    if (t >= offset && t - offset < x.size()) out[t - span_begin] = x[t - offset];
  }
  return out;
}

}  // namespace enhance
