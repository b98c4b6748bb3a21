#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>

#include "enhance/cleaner.h"
#include "oracles.h"

using namespace enhance;

namespace {

MultiChannelSpectrogram make_spec(std::size_t channels, std::size_t frames, std::size_t bins) {
  MultiChannelSpectrogram spec;
  spec.params = FrameParams{};
  spec.channels = channels;
  spec.n_frames = frames;
  spec.n_bins = bins;
  spec.data.assign(channels * frames * bins, cplx(0.0, 0.0));
  return spec;
}

cplx random_cplx(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double re = gauss(rng), im = gauss(rng);
  return cplx(re, im) / std::sqrt(2.0);
}

// Channel 0 carries an exact per-bin L-tap FIR of channel 1's noise; the
// least-squares optimum recovers conj(fir) as the tap vector.
MultiChannelSpectrogram exact_fir_spec(std::mt19937_64& rng, std::size_t frames, std::size_t bins,
                                       const std::vector<cplx>& fir) {
  auto spec = make_spec(2, frames, bins);
  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t f = 0; f < frames; ++f) spec.at(1, f, k) = random_cplx(rng);
    for (std::size_t f = 0; f < frames; ++f) {
      cplx acc(0.0, 0.0);
      for (std::size_t l = 0; l < fir.size(); ++l) {
        if (f >= l) acc += fir[l] * spec.at(1, f - l, k);
      }
      spec.at(0, f, k) = acc;
    }
  }
  return spec;
}

double spec_power(const MultiChannelSpectrogram& spec, std::size_t ch, FrameRange range) {
  double sum = 0.0;
  for (std::size_t f = range.begin; f < range.end; ++f) {
    for (std::size_t k = 0; k < spec.n_bins; ++k) sum += std::norm(spec.at(ch, f, k));
  }
  return sum / static_cast<double>(range.size() * spec.n_bins);
}

}  // namespace

TEST_CASE("cleaner with zero taps passes channel 0 through") {
  std::mt19937_64 rng(1);
  auto spec = make_spec(3, 8, 4);
  for (auto& v : spec.data) v = random_cplx(rng);

  CleanerFilterBank bank(3, 4, CleanerConfig{});
  bank.freeze();
  const auto out = bank.apply(spec, {0, 8});
  for (std::size_t f = 0; f < 8; ++f) {
    for (std::size_t k = 0; k < 4; ++k) CHECK(out.at(0, f, k) == spec.at(0, f, k));
  }
}

TEST_CASE("unit tap with equal channels cancels perfectly") {
  std::mt19937_64 rng(2);
  auto spec = make_spec(2, 6, 3);
  for (std::size_t f = 0; f < 6; ++f) {
    for (std::size_t k = 0; k < 3; ++k) {
      const cplx v = random_cplx(rng);
      spec.at(0, f, k) = v;
      spec.at(1, f, k) = v;
    }
  }
  CleanerConfig config;
  config.taps = 1;
  CleanerFilterBank bank(2, 3, config);
  std::vector<cplx> taps(3, cplx(1.0, 0.0));
  bank.set_taps(taps);
  bank.freeze();
  const auto out = bank.apply(spec, {0, 6});
  for (const auto& v : out.data) CHECK(std::abs(v) < 1e-14);
}

TEST_CASE("cleaner output matches a brute-force tap sum") {
  std::mt19937_64 rng(3);
  const std::size_t m = 4, frames = 9, bins = 3, taps = 3;
  auto spec = make_spec(m, frames, bins);
  for (auto& v : spec.data) v = random_cplx(rng);

  CleanerConfig config;
  config.taps = taps;
  CleanerFilterBank bank(m, bins, config);
  std::vector<cplx> tap_values(bins * (m - 1) * taps);
  for (auto& v : tap_values) v = random_cplx(rng);
  bank.set_taps(tap_values);
  bank.freeze();

  const FrameRange range{2, frames};
  const auto out = bank.apply(spec, range);

  for (std::size_t f = range.begin; f < range.end; ++f) {
    for (std::size_t k = 0; k < bins; ++k) {
      cplx expected = spec.at(0, f, k);
      for (std::size_t aux = 0; aux < m - 1; ++aux) {
        for (std::size_t l = 0; l < taps; ++l) {
          if (f < l) continue;  // zero seeding below frame 0
          expected -= std::conj(bank.tap(k, aux, l)) * spec.at(aux + 1, f - l, k);
        }
      }
      CHECK(std::abs(out.at(0, f - range.begin, k) - expected) < 1e-12);
    }
  }
}

TEST_CASE("RLS on a zero context leaves the taps at zero") {
  auto spec = make_spec(2, 30, 4);
  CleanerFilterBank bank(2, 4, CleanerConfig{});
  bank.adapt(spec, {0, 30});
  for (const auto& v : bank.taps_flat()) CHECK(v == cplx(0.0, 0.0));
}

TEST_CASE("RLS recovers an exact 3-tap FIR and drives the context residual below -40 dB") {
  std::mt19937_64 rng(4);
  const std::vector<cplx> fir = {cplx(0.8, 0.0), cplx(0.3, 0.0), cplx(-0.2, 0.0)};
  const std::size_t frames = 500, bins = 6;
  auto spec = exact_fir_spec(rng, frames, bins, fir);

  CleanerFilterBank bank(2, bins, CleanerConfig{});
  bank.adapt(spec, {0, frames});

  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t l = 0; l < 3; ++l) {
      CHECK(std::abs(bank.tap(k, 0, l) - std::conj(fir[l])) <= 1e-3);
    }
  }

  bank.freeze();
  const auto residual = bank.apply(spec, {0, frames});
  const double in_power = spec_power(spec, 0, {0, frames});
  double out_power = 0.0;
  for (const auto& v : residual.data) out_power += std::norm(v);
  out_power /= static_cast<double>(residual.data.size());
  CHECK(10.0 * std::log10(out_power / in_power) <= -40.0);
}

TEST_CASE("RLS taps equal the dense exponentially-weighted least-squares solution") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    const std::size_t m = 2 + trial % 2;
    const std::size_t taps = 2 + trial % 2;
    const std::size_t dim = (m - 1) * taps;
    const std::size_t frames = 200;

    auto spec = make_spec(m, frames, 1);
    for (auto& v : spec.data) v = random_cplx(rng);

    CleanerConfig config;
    config.taps = taps;
    CleanerFilterBank bank(m, 1, config);
    bank.adapt(spec, {0, frames});

    // Oracle: assemble the stacked regressors exactly as the filter sees them.
    std::vector<Eigen::VectorXcd> regressors;
    std::vector<cplx> desired;
    for (std::size_t f = 0; f < frames; ++f) {
      Eigen::VectorXcd u(dim);
      std::size_t i = 0;
      for (std::size_t aux = 0; aux < m - 1; ++aux) {
        for (std::size_t l = 0; l < taps; ++l) {
          u(static_cast<Eigen::Index>(i++)) =
              f >= l ? spec.at(aux + 1, f - l, 0) : cplx(0.0, 0.0);
        }
      }
      regressors.push_back(u);
      desired.push_back(spec.at(0, f, 0));
    }
    const Eigen::VectorXcd expected =
        oracle::batch_weighted_ls(regressors, desired, config.forgetting, config.delta);

    double err = 0.0, norm = 0.0;
    std::size_t i = 0;
    for (std::size_t aux = 0; aux < m - 1; ++aux) {
      for (std::size_t l = 0; l < taps; ++l) {
        err += std::norm(bank.tap(0, aux, l) - expected(static_cast<Eigen::Index>(i)));
        norm += std::norm(expected(static_cast<Eigen::Index>(i)));
        ++i;
      }
    }
    CHECK(std::sqrt(err / norm) <= 1e-6);
  }
}

TEST_CASE("freeze is idempotent, keeps taps, and blocks further adaptation") {
  std::mt19937_64 rng(6);
  auto spec = make_spec(2, 60, 3);
  for (auto& v : spec.data) v = random_cplx(rng);

  CleanerFilterBank bank(2, 3, CleanerConfig{});
  bank.adapt(spec, {0, 60});
  const std::vector<cplx> before(bank.taps_flat().begin(), bank.taps_flat().end());

  bank.freeze();
  CHECK(bank.frozen());
  const std::vector<cplx> after(bank.taps_flat().begin(), bank.taps_flat().end());
  CHECK(before == after);

  bank.freeze();  // idempotent
  const std::vector<cplx> twice(bank.taps_flat().begin(), bank.taps_flat().end());
  CHECK(before == twice);

  CHECK_THROWS_WITH_AS(bank.adapt(spec, {0, 60}), "filter frozen", std::runtime_error);

  // Application never mutates the frozen taps.
  (void)bank.apply(spec, {10, 60});
  const std::vector<cplx> applied(bank.taps_flat().begin(), bank.taps_flat().end());
  CHECK(before == applied);
}

TEST_CASE("apply requires a frozen bank and seeds delay lines from preceding frames") {
  std::mt19937_64 rng(7);
  auto spec = make_spec(2, 40, 2);
  for (auto& v : spec.data) v = random_cplx(rng);

  CleanerFilterBank bank(2, 2, CleanerConfig{});
  CHECK_THROWS_AS(bank.apply(spec, {0, 40}), std::runtime_error);

  std::vector<cplx> taps(2 * 1 * 3);
  for (auto& v : taps) v = random_cplx(rng);
  bank.set_taps(taps);
  bank.freeze();

  // Output at the first frame of a mid-stream range must use the two
  // preceding context frames, not zeros.
  const std::size_t f0 = 10;
  const auto out = bank.apply(spec, {f0, 40});
  for (std::size_t k = 0; k < 2; ++k) {
    cplx expected = spec.at(0, f0, k);
    for (std::size_t l = 0; l < 3; ++l) expected -= std::conj(bank.tap(k, 0, l)) * spec.at(1, f0 - l, k);
    CHECK(std::abs(out.at(0, 0, k) - expected) < 1e-12);
  }
}

TEST_CASE("frozen filter preserves a target absent from the auxiliary channel") {
  std::mt19937_64 rng(8);
  const std::vector<cplx> fir = {cplx(0.8, 0.0), cplx(0.3, 0.0), cplx(-0.2, 0.0)};
  const std::size_t ctx = 500, hwq = 200, bins = 6;
  auto spec = exact_fir_spec(rng, ctx + hwq, bins, fir);

  // Input SNR -12 dB over the enhancement span on channel 0.
  const double noise_power = spec_power(spec, 0, {ctx, ctx + hwq});
  const double target_scale = std::sqrt(noise_power * std::pow(10.0, -1.2));
  std::vector<cplx> target((ctx + hwq) * bins, cplx(0.0, 0.0));
  for (std::size_t f = ctx; f < ctx + hwq; ++f) {
    for (std::size_t k = 0; k < bins; ++k) {
      target[f * bins + k] = target_scale * random_cplx(rng);
      spec.at(0, f, k) += target[f * bins + k];
    }
  }

  CleanerFilterBank bank(2, bins, CleanerConfig{});
  bank.adapt(spec, {0, ctx});
  bank.freeze();
  const auto out = bank.apply(spec, {ctx, ctx + hwq});

  double err = 0.0, sig = 0.0;
  for (std::size_t f = 0; f < hwq; ++f) {
    for (std::size_t k = 0; k < bins; ++k) {
      err += std::norm(out.at(0, f, k) - target[(ctx + f) * bins + k]);
      sig += std::norm(target[(ctx + f) * bins + k]);
    }
  }
  CHECK(10.0 * std::log10(sig / err) >= 30.0);
}

TEST_CASE("frozen filter keeps cancelling statistically identical noise within 3 dB") {
  std::mt19937_64 rng(9);
  const std::vector<cplx> fir = {cplx(0.6, 0.2), cplx(-0.3, 0.1), cplx(0.1, 0.0)};
  const std::size_t ctx = 600, cont = 400, bins = 4;
  auto spec = exact_fir_spec(rng, ctx + cont, bins, fir);

  CleanerFilterBank bank(2, bins, CleanerConfig{});
  bank.adapt(spec, {0, ctx});
  bank.freeze();

  const auto tail_of_training = bank.apply(spec, {ctx - 100, ctx});
  const auto continuation = bank.apply(spec, {ctx, ctx + cont});
  double train_res = 0.0, cont_res = 0.0;
  for (const auto& v : tail_of_training.data) train_res += std::norm(v);
  train_res /= static_cast<double>(tail_of_training.data.size());
  for (const auto& v : continuation.data) cont_res += std::norm(v);
  cont_res /= static_cast<double>(continuation.data.size());
  CHECK(std::abs(10.0 * std::log10(cont_res / train_res)) <= 3.0);
}

TEST_CASE("windowed residual power is non-increasing on stationary noise") {
  std::mt19937_64 rng(10);
  const std::vector<cplx> fir = {cplx(0.8, 0.0), cplx(0.3, 0.0), cplx(-0.2, 0.0)};
  const std::size_t total = 500, bins = 4, window = 50;
  const auto spec = exact_fir_spec(rng, total, bins, fir);

  CleanerFilterBank bank(2, bins, CleanerConfig{});
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t start = 0; start + window <= total; start += window) {
    bank.adapt(spec, {start, start + window});
    // Predictive residual of the current taps on the next window.
    if (start + 2 * window > total) break;
    CleanerFilterBank probe = bank;
    probe.freeze();
    const auto out = probe.apply(spec, {start + window, start + 2 * window});
    double res = 0.0;
    for (const auto& v : out.data) res += std::norm(v);
    res /= static_cast<double>(out.data.size());
    CHECK(10.0 * std::log10(res) <= 10.0 * std::log10(previous) + 1.0);  // 1 dB slack
    previous = res;
  }
}

TEST_CASE("RLS inverse correlation state stays positive definite while adapting") {
  std::mt19937_64 rng(11);
  auto spec = make_spec(2, 120, 3);
  for (auto& v : spec.data) v = random_cplx(rng);
  CleanerFilterBank bank(2, 3, CleanerConfig{});
  CHECK(bank.min_p_eigenvalue() > 0.0);
  bank.adapt(spec, {0, 120});
  CHECK(bank.min_p_eigenvalue() > 0.0);
  bank.freeze();
  CHECK_THROWS_AS(bank.min_p_eigenvalue(), std::runtime_error);
}

TEST_CASE("tap sidecar round trip is bit exact") {
  std::mt19937_64 rng(12);
  CleanerConfig config;
  config.taps = 3;
  CleanerFilterBank bank(3, 5, config);
  std::vector<cplx> taps(5 * 2 * 3);
  for (auto& v : taps) v = random_cplx(rng);
  bank.set_taps(taps);

  const auto path = (std::filesystem::temp_directory_path() / "taps.bin").string();
  write_taps(path, bank);
  CHECK(std::filesystem::file_size(path) == 12 + taps.size() * 16);

  CleanerFilterBank other(3, 5, config);
  read_taps(path, other);
  for (std::size_t i = 0; i < taps.size(); ++i) CHECK(other.taps_flat()[i] == taps[i]);

  // A frozen bank refuses imported taps.
  CleanerFilterBank frozen_bank(3, 5, config);
  frozen_bank.freeze();
  CHECK_THROWS_AS(read_taps(path, frozen_bank), std::runtime_error);
  std::remove(path.c_str());
}
