#include "enhance/scene.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace enhance {

namespace {

constexpr double kSpeedOfSound = 343.0;
constexpr std::ptrdiff_t kSincHalf = 16;  // 32-tap interpolation kernel

double fractional_tap(double offset) {
  // Hann-windowed sinc; exact delta at integer offsets.
  if (std::abs(offset) >= static_cast<double>(kSincHalf)) return 0.0;
  if (offset == std::round(offset)) return offset == 0.0 ? 1.0 : 0.0;
  const double window = 0.5 + 0.5 * std::cos(std::numbers::pi * offset / static_cast<double>(kSincHalf));
  const double arg = std::numbers::pi * offset;
  return window * std::sin(arg) / arg;
}

std::vector<double> delay_and_gain(const std::vector<double>& x, double delay, double gain,
                                   std::size_t length) {
  if (delay < 0.0) throw std::invalid_argument("render delay must be >= 0");
  const auto d_int = static_cast<std::ptrdiff_t>(std::floor(delay));
  const double frac = delay - std::floor(delay);

  std::vector<double> y(length, 0.0);
  for (std::size_t t = 0; t < length; ++t) {
    const std::ptrdiff_t u = static_cast<std::ptrdiff_t>(t) - d_int;
    double acc = 0.0;
    for (std::ptrdiff_t j = -kSincHalf; j < kSincHalf; ++j) {
      const std::ptrdiff_t idx = u + j;
      if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(x.size())) continue;
      acc += x[static_cast<std::size_t>(idx)] * fractional_tap(static_cast<double>(j) + frac);
    }
    y[t] = gain * acc;
  }
  return y;
}

std::vector<double> convolve_trim(const std::vector<double>& x, const std::vector<double>& h,
                                  std::size_t length) {
  std::vector<double> y(length, 0.0);
  for (std::size_t t = 0; t < length; ++t) {
    double acc = 0.0;
    const std::size_t j_max = std::min(h.size() - 1, t);
    for (std::size_t j = 0; j <= j_max; ++j) {
      const std::size_t idx = t - j;
      if (idx < x.size()) acc += h[j] * x[idx];
    }
    y[t] = acc;
  }
  return y;
}

double span_power(const std::vector<double>& x, std::size_t begin, std::size_t end) {
  double sum = 0.0;
  for (std::size_t t = begin; t < end; ++t) sum += x[t] * x[t];
  return sum / static_cast<double>(end - begin);
}

}  // namespace

std::vector<std::array<double, 2>> default_array(std::size_t channels) {
  if (channels == 0) throw std::invalid_argument("channel count must be >= 1");
  std::vector<std::array<double, 2>> mics;
  mics.push_back({-0.0355, 0.0});
  if (channels > 1) mics.push_back({0.0355, 0.0});
  if (channels > 2) mics.push_back({0.0, 0.05});
  for (std::size_t m = 3; m < channels; ++m) {
    mics.push_back({-0.0355 - 0.071 * static_cast<double>(m - 2), 0.0});
  }
  return mics;
}

std::vector<RenderChannel> steering_for_azimuth(double azimuth_deg, std::size_t channels,
                                                int sample_rate) {
  const auto mics = default_array(channels);
  const double az = azimuth_deg * std::numbers::pi / 180.0;
  // Propagation direction: from the source toward the array.
  const double ux = -std::cos(az), uy = -std::sin(az);

  std::vector<double> arrival(channels);
  double min_arrival = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < channels; ++m) {
    arrival[m] = (mics[m][0] * ux + mics[m][1] * uy) / kSpeedOfSound * sample_rate;
    min_arrival = std::min(min_arrival, arrival[m]);
  }
  std::vector<RenderChannel> render(channels);
  for (std::size_t m = 0; m < channels; ++m) {
    render[m].delay_samples = arrival[m] - min_arrival;
    render[m].gain = 1.0;
  }
  return render;
}

MultiChannelWave render_source(const SourceSpec& src, std::size_t length, std::size_t channels) {
  if (channels == 0) throw std::invalid_argument("channel count must be >= 1");
  MultiChannelWave out;
  out.sample_rate = src.sample_rate;
  out.samples.reserve(channels);

  if (!src.rirs.empty()) {
    if (src.rirs.size() != channels) throw std::invalid_argument("RIR count does not match channel count");
    for (std::size_t m = 0; m < channels; ++m) {
      out.samples.push_back(convolve_trim(src.wave, src.rirs[m], length));
    }
    return out;
  }

  if (src.render.size() != channels) {
    throw std::invalid_argument("render spec count does not match channel count");
  }
  bool any_gain = false;
  for (const auto& rc : src.render) any_gain = any_gain || rc.gain != 0.0;
  if (!any_gain) throw std::invalid_argument("source is silent on every channel");

  for (std::size_t m = 0; m < channels; ++m) {
    out.samples.push_back(delay_and_gain(src.wave, src.render[m].delay_samples, src.render[m].gain, length));
  }
  return out;
}

Scene mix_scene(const SceneSpec& spec, std::size_t ref_channel) {
  if (spec.channels == 0) throw std::invalid_argument("channel count must be >= 1");
  if (ref_channel >= spec.channels) throw std::invalid_argument("reference channel out of range");
  if (spec.target.wave.empty()) throw std::invalid_argument("target audio is empty");
  if (spec.hotword_len_samples == 0 || spec.hotword_len_samples >= spec.target.wave.size()) {
    throw std::invalid_argument("hotword boundary must fall inside the target audio");
  }
  if (spec.target.position_tag == spec.interferer.position_tag && !spec.target.position_tag.empty()) {
    throw std::invalid_argument("target and interferer must not share a position");
  }

  const std::size_t ctx_len = static_cast<std::size_t>(std::llround(spec.context_length_s * spec.sample_rate));
  if (ctx_len == 0) throw std::invalid_argument("context length must be positive");
  const std::size_t total = ctx_len + spec.target.wave.size();
  if (spec.interferer.wave.size() < total) {
    throw std::invalid_argument("interferer audio shorter than context plus target");
  }

  // Mono timeline of the desired speaker: silence (or tiled query audio)
  // through the context, then the hotword+query take.
  std::vector<double> desired_track(total, 0.0);
  std::copy(spec.target.wave.begin(), spec.target.wave.end(), desired_track.begin() + static_cast<std::ptrdiff_t>(ctx_len));
  if (spec.desired_in_context) {
    const std::size_t query_len = spec.target.wave.size() - spec.hotword_len_samples;
    for (std::size_t t = 0; t < ctx_len; ++t) {
      desired_track[t] = spec.target.wave[spec.hotword_len_samples + (t % query_len)];
    }
  }

  SourceSpec desired = spec.target;
  desired.wave = std::move(desired_track);
  Scene scene;
  scene.requested_snr_db = spec.snr_db;
  scene.clean_target = render_source(desired, total, spec.channels);
  scene.clean_target.sample_rate = spec.sample_rate;

  SourceSpec interferer = spec.interferer;
  interferer.wave.resize(total);
  scene.noise_only = render_source(interferer, total, spec.channels);
  scene.noise_only.sample_rate = spec.sample_rate;

  UtteranceSegmentation seg;
  seg.context_start = 0;
  seg.context_end = ctx_len;
  seg.hotword_start = ctx_len;
  seg.hotword_end = ctx_len + spec.hotword_len_samples;
  seg.query_end = total;

  if (spec.boundary_jitter_ms != 0.0) {
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> jitter(-spec.boundary_jitter_ms, spec.boundary_jitter_ms);
    const auto shift = [&](std::size_t value) {
      const double delta = jitter(rng) * 1e-3 * spec.sample_rate;
      const double moved = std::max(1.0, static_cast<double>(value) + delta);
      return static_cast<std::size_t>(std::llround(moved));
    };
    const std::size_t hw_start = std::min(shift(seg.hotword_start), total - 2);
    const std::size_t hw_end = std::clamp(shift(seg.hotword_end), hw_start + 1, total - 1);
    seg.context_end = hw_start;
    seg.hotword_start = hw_start;
    seg.hotword_end = hw_end;
  }
  seg.validate();
  scene.seg = seg;

  // With a clean context the desired rendering must be identically zero
  // before the hotword; the interpolation kernel pre-rings a few samples
  // past the onset, so silence is enforced explicitly.
  if (!spec.desired_in_context) {
    for (auto& ch : scene.clean_target.samples) {
      std::fill(ch.begin(), ch.begin() + static_cast<std::ptrdiff_t>(seg.hotword_start), 0.0);
    }
  }

  // Calibrate the interferer against the desired rendering over the
  // hotword+query span on the reference channel.
  const double p_target = span_power(scene.clean_target.samples[ref_channel], seg.hotword_start, seg.query_end);
  const double p_noise = span_power(scene.noise_only.samples[ref_channel], seg.hotword_start, seg.query_end);
  if (p_target <= 0.0) throw std::invalid_argument("silent target over the hotword+query span");

  double alpha = 0.0;
  if (std::isinf(spec.snr_db) && spec.snr_db > 0.0) {
    alpha = 0.0;
  } else {
    if (p_noise <= 0.0) throw std::invalid_argument("silent interferer over the hotword+query span");
    alpha = std::sqrt(p_target / (p_noise * std::pow(10.0, spec.snr_db / 10.0)));
  }
  for (auto& ch : scene.noise_only.samples) {
    for (auto& v : ch) v *= alpha;
  }

  // Ambient floor joins the noise ground truth after calibration; the
  // requested target-to-interferer ratio is unaffected.
  if (spec.ambient_rms > 0.0) {
    std::mt19937_64 rng(spec.seed * 0x51ab5u + 17u);
    std::normal_distribution<double> gauss(0.0, spec.ambient_rms);
    for (auto& ch : scene.noise_only.samples) {
      for (auto& v : ch) v += gauss(rng);
    }
  }

  scene.mixture.sample_rate = spec.sample_rate;
  scene.mixture.samples.resize(spec.channels);
  for (std::size_t m = 0; m < spec.channels; ++m) {
    auto& mix = scene.mixture.samples[m];
    mix.resize(total);
    for (std::size_t t = 0; t < total; ++t) {
      mix[t] = scene.clean_target.samples[m][t] + scene.noise_only.samples[m][t];
    }
  }
  return scene;
}

void truncate_context(Scene& scene, double new_length_s, std::size_t min_context_samples) {
  const std::size_t new_len =
      static_cast<std::size_t>(std::llround(new_length_s * scene.mixture.sample_rate));
  const std::size_t current = scene.seg.hotword_start - scene.seg.context_start;
  if (new_len > current) throw std::invalid_argument("new context exceeds the current context");
  if (new_len < min_context_samples) throw std::invalid_argument("new context shorter than one frame");
  const std::size_t drop = current - new_len;
  if (drop == 0) return;

  for (MultiChannelWave* wave : {&scene.mixture, &scene.clean_target, &scene.noise_only}) {
    for (auto& ch : wave->samples) ch.erase(ch.begin(), ch.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  scene.seg.context_end -= drop;
  scene.seg.hotword_start -= drop;
  scene.seg.hotword_end -= drop;
  scene.seg.query_end -= drop;
}

}  // namespace enhance
