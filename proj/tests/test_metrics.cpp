#include <doctest.h>

#include <random>

#include "enhance/metrics.h"
#include "enhance/scene.h"
#include "enhance/synth.h"

using namespace enhance;

TEST_CASE("si_sdr clamps the exact-match case at +80 dB") {
  const auto ref = white_noise(1, 2000);
  CHECK(si_sdr(ref, ref) == 80.0);

  auto scaled = ref;
  for (auto& v : scaled) v *= 2.0;
  CHECK(si_sdr(scaled, ref) == 80.0);
}

TEST_CASE("orthogonal noise at equal energy scores 0 dB") {
  auto ref = white_noise(2, 4000);
  auto noise = white_noise(3, 4000);

  // Orthogonalize the noise against the reference, then match energies.
  double dot = 0.0, ref_e = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    dot += noise[i] * ref[i];
    ref_e += ref[i] * ref[i];
  }
  double noise_e = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    noise[i] -= dot / ref_e * ref[i];
    noise_e += noise[i] * noise[i];
  }
  const double gain = std::sqrt(ref_e / noise_e);
  std::vector<double> est(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) est[i] = ref[i] + gain * noise[i];

  CHECK(si_sdr(est, ref) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("si_sdr is scale invariant") {
  const auto ref = white_noise(4, 3000);
  auto est = white_noise(5, 3000);
  for (std::size_t i = 0; i < est.size(); ++i) est[i] = 0.2 * est[i] + ref[i];
  const double base = si_sdr(est, ref);
  for (double c : {0.01, -3.7, 1234.5}) {
    auto scaled = est;
    for (auto& v : scaled) v *= c;
    CHECK(si_sdr(scaled, ref) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("si_sdr rejects a zero reference") {
  std::vector<double> zeros(100, 0.0), est(100, 1.0);
  CHECK_THROWS_AS(si_sdr(est, zeros), std::invalid_argument);
}

TEST_CASE("segmental SNR clamps at the ceiling and the floor") {
  const auto ref = white_noise(6, 16000);
  CHECK(segmental_snr(ref, ref, 16000) == doctest::Approx(35.0));
  const std::vector<double> silence(16000, 0.0);
  CHECK(segmental_snr(silence, ref, 16000) == doctest::Approx(-10.0));
}

TEST_CASE("segmental SNR recovers a constructed per-window ratio") {
  // Exactly 10 dB residual in every 32 ms window.
  const int rate = 16000;
  const std::size_t win = 512, n_windows = 40;
  auto ref = white_noise(7, win * n_windows);
  auto noise = white_noise(8, win * n_windows);
  std::vector<double> est(ref.size());
  for (std::size_t w = 0; w < n_windows; ++w) {
    double rp = 0.0, np = 0.0;
    for (std::size_t i = w * win; i < (w + 1) * win; ++i) {
      rp += ref[i] * ref[i];
      np += noise[i] * noise[i];
    }
    const double gain = std::sqrt(rp / (np * 10.0));  // residual power = ref power / 10
    for (std::size_t i = w * win; i < (w + 1) * win; ++i) est[i] = ref[i] + gain * noise[i];
  }
  CHECK(segmental_snr(est, ref, rate) == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("segmental SNR needs at least one active window") {
  const std::vector<double> quiet(4096, 1e-6);
  const std::vector<double> est(4096, 0.0);
  CHECK_THROWS_AS(segmental_snr(est, quiet, 16000), std::runtime_error);
}

TEST_CASE("best_alignment finds an integer shift") {
  auto ref = white_noise(9, 4000);
  std::vector<double> est(ref.size(), 0.0);
  const int shift = 37;
  for (std::size_t t = shift; t < est.size(); ++t) est[t] = ref[t - shift];
  CHECK(best_alignment(est, ref, 128) == shift);
}

namespace {

Scene tiny_scene(double snr_db) {
  SceneSpec spec;
  spec.sample_rate = 16000;
  spec.channels = 2;
  spec.snr_db = snr_db;
  spec.context_length_s = 1.0;
  spec.target.wave = speech_like(21, 16000);
  spec.target.position_tag = "t";
  spec.target.render = steering_for_azimuth(90.0, 2, 16000);
  spec.hotword_len_samples = 6400;
  spec.interferer.wave = speech_shaped_noise(22, 16000 + 16000);
  spec.interferer.position_tag = "i";
  spec.interferer.render = steering_for_azimuth(30.0, 2, 16000);
  return mix_scene(spec);
}

}  // namespace

TEST_CASE("evaluate_run scores the passthrough path at exactly zero improvement") {
  const auto scene = tiny_scene(0.0);
  const FrameParams params;

  // Reproduce the identity path, then feed it back as the "enhanced" signal.
  const auto frames = segment_frames(scene.seg, params);
  const auto spec = stft(scene.mixture, params);
  const auto slice = slice_channel_frames(spec, 0, frames.hotword_query());
  const auto pass = synthesize_span(slice, frames.hotword_query().begin, scene.seg.hotword_start,
                                    scene.seg.query_end);

  const auto report = evaluate_run(pass, scene.clean_target, scene.mixture, scene.seg, params, 0, 0.0);
  CHECK(report.si_sdr_improvement_db == 0.0);
}

TEST_CASE("evaluate_run scores the clean reference at the ceiling") {
  const auto scene = tiny_scene(0.0);
  const FrameParams params;
  std::vector<double> clean_span(scene.seg.query_end - scene.seg.hotword_start);
  for (std::size_t t = 0; t < clean_span.size(); ++t) {
    clean_span[t] = scene.clean_target.samples[0][scene.seg.hotword_start + t];
  }
  const auto report =
      evaluate_run(clean_span, scene.clean_target, scene.mixture, scene.seg, params, 0, 0.0);
  CHECK(report.si_sdr_db == 80.0);
  CHECK(report.seg_snr_db == doctest::Approx(35.0));

  // Improvement of the ceiling case is 80 dB minus the passthrough score.
  const auto frames = segment_frames(scene.seg, params);
  const auto spec = stft(scene.mixture, params);
  const auto slice = slice_channel_frames(spec, 0, frames.hotword_query());
  const auto pass = synthesize_span(slice, frames.hotword_query().begin, scene.seg.hotword_start,
                                    scene.seg.query_end);
  const auto baseline = evaluate_run(pass, scene.clean_target, scene.mixture, scene.seg, params, 0, 0.0);
  CHECK(report.si_sdr_improvement_db == doctest::Approx(80.0 - baseline.si_sdr_db).epsilon(1e-12));
}
