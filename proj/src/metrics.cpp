#include "enhance/metrics.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace enhance {

namespace {

constexpr double kSiSdrClampDb = 80.0;
constexpr double kSegSnrFloorDb = -10.0;
constexpr double kSegSnrCeilDb = 35.0;
constexpr double kActiveWindowPower = 1e-6;  // -60 dBFS mean square

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

}  // namespace

double si_sdr(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size() || reference.empty()) {
    throw std::invalid_argument("si_sdr requires equal non-empty lengths");
  }
  const double ref_energy = dot(reference, reference);
  if (ref_energy <= 0.0) throw std::invalid_argument("si_sdr reference is identically zero");

  const double alpha = dot(estimate, reference) / ref_energy;
  double target_energy = 0.0, residual_energy = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double target = alpha * reference[i];
    const double residual = estimate[i] - target;
    target_energy += target * target;
    residual_energy += residual * residual;
  }
  if (target_energy <= 0.0) return -kSiSdrClampDb;
  if (residual_energy <= 0.0) return kSiSdrClampDb;
  return std::clamp(10.0 * std::log10(target_energy / residual_energy), -kSiSdrClampDb, kSiSdrClampDb);
}

double segmental_snr(std::span<const double> estimate, std::span<const double> reference,
                     int sample_rate, double window_ms) {
  if (estimate.size() != reference.size() || reference.empty()) {
    throw std::invalid_argument("segmental_snr requires equal non-empty lengths");
  }
  const std::size_t win = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(window_ms * 1e-3 * sample_rate)));

  double sum = 0.0;
  std::size_t active = 0;
  for (std::size_t start = 0; start + win <= reference.size(); start += win) {
    double ref_pow = 0.0, cross = 0.0;
    for (std::size_t i = start; i < start + win; ++i) {
      ref_pow += reference[i] * reference[i];
      cross += reference[i] * estimate[i];
    }
    if (ref_pow / static_cast<double>(win) < kActiveWindowPower) continue;

    // Per-window scale-invariant ratio: project the estimate on the
    // reference, score target power against the residual.
    const double alpha = cross / ref_pow;
    double target_pow = 0.0, err_pow = 0.0;
    for (std::size_t i = start; i < start + win; ++i) {
      const double target = alpha * reference[i];
      const double e = estimate[i] - target;
      target_pow += target * target;
      err_pow += e * e;
    }
    double snr = kSegSnrFloorDb;
    if (target_pow > 0.0) {
      snr = err_pow <= 0.0 ? kSegSnrCeilDb : 10.0 * std::log10(target_pow / err_pow);
    }
    sum += std::clamp(snr, kSegSnrFloorDb, kSegSnrCeilDb);
    ++active;
  }
  if (active == 0) throw std::runtime_error("segmental_snr: no active windows");
  return sum / static_cast<double>(active);
}

int best_alignment(std::span<const double> estimate, std::span<const double> reference,
                   std::size_t max_lag) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(std::min(estimate.size(), reference.size()));
  const std::ptrdiff_t limit = static_cast<std::ptrdiff_t>(max_lag);
  int best_lag = 0;
  double best_score = -1.0;
  for (std::ptrdiff_t lag = -limit; lag <= limit; ++lag) {
    double corr = 0.0;
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -lag);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, n - lag);
    for (std::ptrdiff_t t = lo; t < hi; ++t) corr += estimate[static_cast<std::size_t>(t + lag)] * reference[static_cast<std::size_t>(t)];
    const double score = std::abs(corr);
    if (score > best_score) {
      best_score = score;
      best_lag = static_cast<int>(lag);
    }
  }
  return best_lag;
}

namespace {

// SI-SDR after integer delay compensation against the reference.
double aligned_si_sdr(std::span<const double> estimate, std::span<const double> reference,
                      std::size_t max_lag) {
  const int lag = best_alignment(estimate, reference, max_lag);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(std::min(estimate.size(), reference.size()));
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -lag);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, n - lag);
  if (hi <= lo) throw std::runtime_error("alignment left no overlap");
  std::vector<double> est(static_cast<std::size_t>(hi - lo)), ref(static_cast<std::size_t>(hi - lo));
  for (std::ptrdiff_t t = lo; t < hi; ++t) {
    est[static_cast<std::size_t>(t - lo)] = estimate[static_cast<std::size_t>(t + lag)];
    ref[static_cast<std::size_t>(t - lo)] = reference[static_cast<std::size_t>(t)];
  }
  return si_sdr(est, ref);
}

}  // namespace

MetricReport evaluate_run(std::span<const double> enhanced, const MultiChannelWave& clean_target,
                          const MultiChannelWave& mixture, const UtteranceSegmentation& seg,
                          const FrameParams& params, std::size_t ref_channel,
                          double noise_reduction_db) {
  seg.validate();
  if (ref_channel >= clean_target.channel_count() || ref_channel >= mixture.channel_count()) {
    throw std::invalid_argument("reference channel out of range");
  }
  const std::size_t span = seg.query_end - seg.hotword_start;
  if (enhanced.size() != span) throw std::invalid_argument("enhanced length does not match hotword+query span");

  std::vector<double> clean_ref(span);
  const auto& clean = clean_target.samples[ref_channel];
  for (std::size_t t = 0; t < span; ++t) clean_ref[t] = clean.at(seg.hotword_start + t);

  // Identity path through the same framing as every enhancement mode.
  const auto frames = segment_frames(seg, params);
  const auto spec = stft(mixture, params);
  const FrameRange hwq = frames.hotword_query();
  if (hwq.end > spec.n_frames) throw std::invalid_argument("segmentation exceeds mixture length");
  const auto pass_slice = slice_channel_frames(spec, ref_channel, hwq);
  const auto passthrough = synthesize_span(pass_slice, hwq.begin, seg.hotword_start, seg.query_end);

  MetricReport report;
  report.si_sdr_db = aligned_si_sdr(enhanced, clean_ref, params.fft_size);
  const double baseline = aligned_si_sdr(passthrough, clean_ref, params.fft_size);
  report.si_sdr_improvement_db = report.si_sdr_db - baseline;
  report.seg_snr_db = segmental_snr(enhanced, clean_ref, clean_target.sample_rate);
  report.noise_reduction_db = noise_reduction_db;
  return report;
}

}  // namespace enhance
