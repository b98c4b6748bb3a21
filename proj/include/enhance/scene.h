// Synthetic experiment harness: renders target and interferer sources to an
// M-channel array, mixes at a calibrated SNR with a prepended noise context,
// and keeps the isolated ground-truth renderings for metric computation.
#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "enhance/signal.h"

namespace enhance {

struct RenderChannel {
  double delay_samples = 0.0;  // >= 0, fractional allowed
  double gain = 1.0;
};

struct SourceSpec {
  std::vector<double> wave;  // mono source audio
  std::string position_tag;
  std::vector<RenderChannel> render;       // per channel, used when rirs empty
  std::vector<std::vector<double>> rirs;   // per channel impulse responses
  int sample_rate = 16000;
};

struct SceneSpec {
  SourceSpec target;                  // hotword followed by query
  std::size_t hotword_len_samples = 0;  // hotword spans target.wave[0, hotword_len)
  SourceSpec interferer;
  double snr_db = 0.0;  // +infinity renders the interferer-free case
  double context_length_s = 8.0;
  bool desired_in_context = false;
  double boundary_jitter_ms = 0.0;  // hotword boundary perturbation, +-range
  // Uncalibrated room-noise floor added to every channel; keeps the noise
  // context non-silent even when the interferer is absent.
  double ambient_rms = 0.0;
  std::uint64_t seed = 0;
  int sample_rate = 16000;
  std::size_t channels = 3;
};

struct Scene {
  MultiChannelWave mixture;
  MultiChannelWave clean_target;  // isolated desired rendering, zero in a clean context
  MultiChannelWave noise_only;    // scaled interferer rendering
  UtteranceSegmentation seg;
  double requested_snr_db = 0.0;
};

// Microphone coordinates (meters) for the default preset: a 7.1 cm pair
// plus a front microphone, extended linearly beyond three channels.
std::vector<std::array<double, 2>> default_array(std::size_t channels);

// Far-field plane-wave delays (speed of sound 343 m/s) toward the default
// array from the given azimuth; unity gains, delays offset to be >= 0.
std::vector<RenderChannel> steering_for_azimuth(double azimuth_deg, std::size_t channels,
                                                int sample_rate);

// Per-channel fractional delay (32-tap windowed sinc) and gain, or RIR
// convolution when impulse responses are supplied. Output trimmed or
// zero-padded to `length`.
MultiChannelWave render_source(const SourceSpec& src, std::size_t length, std::size_t channels);

// Builds the full utterance: interferer runs from t = 0, the target starts
// at the hotword boundary after the noise context, and the interferer is
// scaled so the reference-channel power ratio over [hotword_start,
// query_end) meets snr_db. With desired_in_context, query audio from the
// target position also fills the context span.
Scene mix_scene(const SceneSpec& spec, std::size_t ref_channel = 0);

// Drops the earliest context samples; hotword and query bits are untouched.
void truncate_context(Scene& scene, double new_length_s, std::size_t min_context_samples = 512);

constexpr double kInfiniteSnrDb = std::numeric_limits<double>::infinity();

}  // namespace enhance
