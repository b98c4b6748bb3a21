#include "enhance/pipeline.h"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace enhance {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double span_mean_square(std::span<const double> x, std::size_t begin, std::size_t end) {
  double sum = 0.0;
  for (std::size_t t = begin; t < end; ++t) sum += x[t] * x[t];
  return sum / static_cast<double>(end - begin);
}

// One-sided spectral energy of a channel over a frame range, interior bins
// counted twice.
double spectral_energy(const MultiChannelSpectrogram& spec, std::size_t channel, FrameRange range) {
  double sum = 0.0;
  for (std::size_t f = range.begin; f < range.end; ++f) {
    const auto bins = spec.frame(channel, f);
    sum += std::norm(bins.front()) + std::norm(bins.back());
    for (std::size_t k = 1; k + 1 < bins.size(); ++k) sum += 2.0 * std::norm(bins[k]);
  }
  return sum;
}

double noise_reduction_from(const MultiChannelSpectrogram& in_spec, std::size_t ref,
                            const MultiChannelSpectrogram& out_spec, FrameRange ctx) {
  const double p_in = spectral_energy(in_spec, ref, ctx);
  const double p_out = spectral_energy(out_spec, 0, {0, out_spec.n_frames});
  if (p_in <= 0.0 || p_out <= 0.0) return 0.0;
  return 10.0 * std::log10(p_in / p_out);
}

EigRatioSummary eig_ratio_summary(const SubbandCovariance& cov, const BeamformerWeights& weights) {
  EigRatioSummary s;
  s.min = 1.0;
  s.max = 0.0;
  double sum = 0.0;
  std::size_t counted = 0;
  std::vector<cplx> av(cov.channels);
  for (std::size_t k = 0; k < cov.bins; ++k) {
    const double tr = cov.trace(k);
    if (tr <= 0.0 || weights.degenerate[k]) continue;
    for (std::size_t r = 0; r < cov.channels; ++r) {
      cplx acc(0.0, 0.0);
      for (std::size_t c = 0; c < cov.channels; ++c) acc += cov.at(k, r, c) * weights.at(k, c);
      av[r] = acc;
    }
    double rayleigh = 0.0;
    for (std::size_t r = 0; r < cov.channels; ++r) rayleigh += (std::conj(weights.at(k, r)) * av[r]).real();
    const double ratio = rayleigh / tr;
    s.min = std::min(s.min, ratio);
    s.max = std::max(s.max, ratio);
    sum += ratio;
    ++counted;
  }
  s.mean = counted > 0 ? sum / static_cast<double>(counted) : 0.0;
  if (counted == 0) {
    s.min = 0.0;
    s.max = 0.0;
  }
  return s;
}

FrameRange clamp_range(FrameRange r, std::size_t n_frames) {
  r.begin = std::min(r.begin, n_frames);
  r.end = std::min(r.end, n_frames);
  return r;
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::SpeechCleaner: return "SpeechCleaner";
    case Algorithm::Cab: return "CAB";
    case Algorithm::Passthrough: return "Passthrough";
  }
  return "?";
}

std::string to_string(ForcedMode m) {
  switch (m) {
    case ForcedMode::Select: return "select";
    case ForcedMode::Cab: return "cab";
    case ForcedMode::SpeechCleaner: return "sc";
    case ForcedMode::Oracle: return "oracle";
    case ForcedMode::Passthrough: return "passthrough";
  }
  return "?";
}

SnrEstimate estimate_snr(const MultiChannelWave& wave, const UtteranceSegmentation& seg,
                         std::size_t ref_channel, double floor_db) {
  wave.validate();
  seg.validate();
  if (ref_channel >= wave.channel_count()) throw std::invalid_argument("reference channel out of range");
  if (seg.query_end > wave.length()) throw std::invalid_argument("segmentation exceeds signal length");

  const auto min_span = static_cast<std::size_t>(0.1 * wave.sample_rate);
  if (seg.context_end - seg.context_start < min_span) throw std::invalid_argument("context shorter than 0.1 s");
  if (seg.hotword_end - seg.hotword_start < min_span) throw std::invalid_argument("hotword shorter than 0.1 s");

  SnrEstimate est;
  const auto ref = wave.channel(ref_channel);
  est.context_power = span_mean_square(ref, seg.context_start, seg.context_end);
  est.hotword_power = span_mean_square(ref, seg.hotword_start, seg.hotword_end);
  if (est.context_power <= 0.0) throw std::runtime_error("silent context");

  est.linear = est.hotword_power / est.context_power - 1.0;
  const double floor_linear = std::pow(10.0, floor_db / 10.0);
  est.db = 10.0 * std::log10(std::max(est.linear, floor_linear));
  return est;
}

EnhancementDecision select_algorithm(const SnrEstimate& snr, double gamma_db) {
  EnhancementDecision decision;
  decision.snr = snr;
  decision.gamma_db = gamma_db;
  decision.chosen = snr.db < gamma_db ? Algorithm::SpeechCleaner : Algorithm::Cab;
  return decision;
}

namespace {

EnhancementResult run_pipeline(const MultiChannelWave& wave, const UtteranceSegmentation& seg,
                               const PipelineConfig& config, ForcedMode mode,
                               const MultiChannelWave* clean_reference) {
  const auto t_total = Clock::now();
  wave.validate();
  seg.validate();
  config.frame_params.validate();
  if (wave.sample_rate != config.sample_rate) {
    throw std::invalid_argument("sample rate mismatch between input and configuration");
  }
  if (seg.query_end > wave.length()) throw std::invalid_argument("segmentation exceeds signal length");
  if (config.reference_channel >= wave.channel_count()) {
    throw std::invalid_argument("reference channel out of range");
  }

  EnhancementResult result;
  result.decision.gamma_db = config.gamma_db;

  // The estimate is mandatory for selection, best-effort otherwise.
  try {
    result.decision.snr = estimate_snr(wave, seg, config.reference_channel, config.snr_floor_db);
  } catch (const std::exception& e) {
    if (mode == ForcedMode::Select) throw;
    result.diag.warnings.push_back(std::string("snr estimate unavailable: ") + e.what());
  }

  if (wave.channel_count() < 2) {
    if (mode == ForcedMode::Cab || mode == ForcedMode::SpeechCleaner || mode == ForcedMode::Oracle) {
      throw std::invalid_argument("beamforming requires >= 2 channels");
    }
    if (mode == ForcedMode::Select) {
      result.diag.warnings.push_back("single-channel input, falling back to passthrough");
    }
    mode = ForcedMode::Passthrough;
  }

  if (mode == ForcedMode::Select) {
    result.decision = select_algorithm(result.decision.snr, config.gamma_db);
  } else {
    result.decision.chosen = mode == ForcedMode::SpeechCleaner ? Algorithm::SpeechCleaner
                             : mode == ForcedMode::Passthrough ? Algorithm::Passthrough
                                                               : Algorithm::Cab;
  }

  auto t0 = Clock::now();
  const auto spec = stft(wave, config.frame_params);
  result.diag.timings.stft_ms = ms_since(t0);

  auto frames = segment_frames(seg, config.frame_params);
  frames.context = clamp_range(frames.context, spec.n_frames);
  frames.hotword = clamp_range(frames.hotword, spec.n_frames);
  frames.query = clamp_range(frames.query, spec.n_frames);
  const FrameRange hwq = frames.hotword_query();
  if (frames.context.empty() || frames.hotword.empty() || hwq.empty()) {
    throw std::invalid_argument("segment too short after framing");
  }

  MultiChannelSpectrogram enhanced_slice;
  const Algorithm algo = mode == ForcedMode::Select ? result.decision.chosen
                         : mode == ForcedMode::Passthrough ? Algorithm::Passthrough
                         : mode == ForcedMode::SpeechCleaner ? Algorithm::SpeechCleaner
                                                             : Algorithm::Cab;

  if (algo == Algorithm::Passthrough) {
    t0 = Clock::now();
    enhanced_slice = slice_channel_frames(spec, config.reference_channel, hwq);
    result.diag.timings.apply_ms = ms_since(t0);
    result.diag.noise_reduction_db = 0.0;
  } else if (algo == Algorithm::SpeechCleaner) {
    const std::size_t min_context = std::max<std::size_t>(1, config.cleaner.taps);
    if (frames.context.size() < min_context) {
      throw std::invalid_argument("context shorter than minimum for the cleaner");
    }
    CleanerConfig cleaner_config = config.cleaner;
    cleaner_config.reference_channel = config.reference_channel;
    CleanerFilterBank bank(spec.channels, spec.n_bins, cleaner_config);

    t0 = Clock::now();
    bank.adapt(spec, frames.context);
    bank.freeze();
    result.diag.timings.adapt_ms = ms_since(t0);

    t0 = Clock::now();
    enhanced_slice = bank.apply(spec, hwq);
    result.diag.timings.apply_ms = ms_since(t0);

    const auto ctx_out = bank.apply(spec, frames.context);
    result.diag.noise_reduction_db =
        noise_reduction_from(spec, config.reference_channel, ctx_out, frames.context);
  } else {
    // CAB, with either the estimated or the oracle desired-signal covariance.
    t0 = Clock::now();
    SubbandCovariance desired;
    SubbandCovariance noise = estimate_covariance(spec, frames.context, CovarianceKind::Noise);
    if (mode == ForcedMode::Oracle) {
      if (clean_reference == nullptr) throw std::invalid_argument("oracle requires clean reference");
      clean_reference->validate();
      if (clean_reference->channel_count() != wave.channel_count() ||
          clean_reference->length() != wave.length()) {
        throw std::invalid_argument("clean reference shape does not match the input");
      }
      const auto clean_spec = stft(*clean_reference, config.frame_params);
      desired = oracle_covariance(clean_spec, hwq);
    } else {
      const auto noisy = estimate_covariance(spec, frames.hotword, CovarianceKind::Noisy);
      desired = subtract_covariance(noisy, noise);
    }
    auto weights = principal_eigenvector(desired, config.cab.psd_floor);
    result.diag.eig_ratio = eig_ratio_summary(desired, weights);
    result.diag.timings.estimate_ms = ms_since(t0);

    if (config.cab.lms_enabled) {
      t0 = Clock::now();
      weights = adapt_lms_mvdr(weights, spec, hwq, config.cab.lms_step, noise);
      result.diag.timings.adapt_ms = ms_since(t0);
    }

    t0 = Clock::now();
    const auto hwq_slice = slice_frames(spec, hwq);
    enhanced_slice = apply_beamformer(weights, hwq_slice);
    result.diag.timings.apply_ms = ms_since(t0);

    const auto ctx_slice = slice_frames(spec, frames.context);
    const auto ctx_out = apply_beamformer(weights, ctx_slice);
    result.diag.noise_reduction_db =
        noise_reduction_from(spec, config.reference_channel, ctx_out, frames.context);
  }

  t0 = Clock::now();
  result.enhanced = synthesize_span(enhanced_slice, hwq.begin, seg.hotword_start, seg.query_end);
  result.diag.timings.synth_ms = ms_since(t0);
  result.diag.timings.total_ms = ms_since(t_total);
  return result;
}

}  // namespace

EnhancementResult enhance_utterance(const MultiChannelWave& wave, const UtteranceSegmentation& seg,
                                    const PipelineConfig& config) {
  return run_pipeline(wave, seg, config, ForcedMode::Select, nullptr);
}

EnhancementResult enhance_forced(const MultiChannelWave& wave, const UtteranceSegmentation& seg,
                                 const PipelineConfig& config, ForcedMode mode,
                                 const MultiChannelWave* clean_reference) {
  return run_pipeline(wave, seg, config, mode, clean_reference);
}

std::string diagnostics_to_json(const EnhancementResult& result, const PipelineConfig& config) {
  nlohmann::ordered_json j;
  j["decision"] = to_string(result.decision.chosen);
  j["snr_db"] = result.decision.snr.db;
  j["snr_linear"] = result.decision.snr.linear;
  j["hotword_power"] = result.decision.snr.hotword_power;
  j["context_power"] = result.decision.snr.context_power;
  j["gamma_db"] = result.decision.gamma_db;
  j["noise_reduction_db"] = result.diag.noise_reduction_db;
  if (result.diag.eig_ratio) {
    j["eig_ratio"] = {{"mean", result.diag.eig_ratio->mean},
                      {"min", result.diag.eig_ratio->min},
                      {"max", result.diag.eig_ratio->max}};
  }
  j["timings_ms"] = {{"stft", result.diag.timings.stft_ms},
                     {"estimate", result.diag.timings.estimate_ms},
                     {"adapt", result.diag.timings.adapt_ms},
                     {"apply", result.diag.timings.apply_ms},
                     {"synth", result.diag.timings.synth_ms},
                     {"total", result.diag.timings.total_ms}};
  j["config"] = {{"fft_size", config.frame_params.fft_size},
                 {"hop_size", config.frame_params.hop_size},
                 {"window", config.frame_params.window},
                 {"sample_rate", config.sample_rate},
                 {"gamma_db", config.gamma_db},
                 {"context_length_s", config.context_length_s},
                 {"cleaner_taps", config.cleaner.taps},
                 {"cleaner_forgetting", config.cleaner.forgetting},
                 {"cleaner_delta", config.cleaner.delta},
                 {"lms_enabled", config.cab.lms_enabled},
                 {"reference_channel", config.reference_channel}};
  j["warnings"] = result.diag.warnings;
  return j.dump(2);
}

}  // namespace enhance
