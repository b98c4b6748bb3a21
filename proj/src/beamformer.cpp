#include "enhance/beamformer.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "enhance/hermitian.h"

namespace enhance {

double SubbandCovariance::trace(std::size_t bin) const {
  double t = 0.0;
  for (std::size_t m = 0; m < channels; ++m) t += at(bin, m, m).real();
  return t;
}

SubbandCovariance estimate_covariance(const MultiChannelSpectrogram& spec, FrameRange frames,
                                      CovarianceKind kind) {
  if (spec.channels < 2) throw std::invalid_argument("beamforming requires >= 2 channels");
  if (frames.empty() || frames.end > spec.n_frames) throw std::invalid_argument("no frames in segment");

  SubbandCovariance cov;
  cov.channels = spec.channels;
  cov.bins = spec.n_bins;
  cov.kind = kind;
  cov.frame_count_used = frames.size();
  cov.mats.assign(cov.bins * cov.channels * cov.channels, cplx(0.0, 0.0));

  const double scale = 1.0 / static_cast<double>(frames.size());
  for (std::size_t f = frames.begin; f < frames.end; ++f) {
    for (std::size_t k = 0; k < cov.bins; ++k) {
      for (std::size_t r = 0; r < cov.channels; ++r) {
        const cplx yr = spec.at(r, f, k);
        for (std::size_t c = 0; c < cov.channels; ++c) {
          cov.at(k, r, c) += yr * std::conj(spec.at(c, f, k));
        }
      }
    }
  }
  for (auto& v : cov.mats) v *= scale;
  return cov;
}

SubbandCovariance oracle_covariance(const MultiChannelSpectrogram& clean_spec, FrameRange frames) {
  return estimate_covariance(clean_spec, frames, CovarianceKind::Oracle);
}

SubbandCovariance project_psd(const SubbandCovariance& cov) {
  SubbandCovariance out = cov;
  const std::size_t m = cov.channels;
  HermitianEig eig(m);
  std::vector<cplx> a(m * m);
  for (std::size_t k = 0; k < cov.bins; ++k) {
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < m; ++c) a[r * m + c] = cov.at(k, r, c);
    }
    eig.decompose(a);
    for (auto& lam : eig.values) lam = std::max(lam, 0.0);
    // Reconstruct V diag(max(lam,0)) V^H.
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < m; ++c) {
        cplx sum(0.0, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
          sum += eig.values[j] * eig.vector(j, r) * std::conj(eig.vector(j, c));
        }
        out.at(k, r, c) = sum;
      }
    }
  }
  return out;
}

SubbandCovariance subtract_covariance(const SubbandCovariance& noisy, const SubbandCovariance& noise) {
  if (noisy.channels != noise.channels || noisy.bins != noise.bins) {
    throw std::invalid_argument("covariance shapes differ");
  }
  if (noisy.kind != CovarianceKind::Noisy || noise.kind != CovarianceKind::Noise) {
    throw std::invalid_argument("subtract_covariance expects (noisy, noise) kinds");
  }
  SubbandCovariance diff = noisy;
  diff.kind = CovarianceKind::Desired;
  for (std::size_t i = 0; i < diff.mats.size(); ++i) diff.mats[i] -= noise.mats[i];
  return project_psd(diff);
}

namespace {

constexpr std::size_t kPowerIterMax = 200;
constexpr double kPowerIterRelTol = 1e-12;
constexpr double kNoiseTraceRatio = 1e-12;
constexpr double kAnchorMagnitudeRatio = 0.1;
constexpr std::size_t kRefChannel = 0;

// Rotates w by a unit phase so the anchor entry is real non-negative. The
// anchor is the reference channel unless its magnitude is tiny relative to
// the largest entry, in which case the largest-magnitude entry anchors
// (ties broken by lowest index).
void normalize_phase(std::vector<cplx>& w) {
  std::size_t best = 0;
  for (std::size_t m = 1; m < w.size(); ++m) {
    if (std::abs(w[m]) > std::abs(w[best])) best = m;
  }
  std::size_t anchor = kRefChannel;
  if (std::abs(w[kRefChannel]) < kAnchorMagnitudeRatio * std::abs(w[best])) anchor = best;
  const double mag = std::abs(w[anchor]);
  if (mag == 0.0) return;
  const cplx phase = std::conj(w[anchor]) / mag;
  for (auto& v : w) v *= phase;
  w[anchor] = cplx(std::abs(w[anchor]), 0.0);
}

}  // namespace

BeamformerWeights principal_eigenvector(const SubbandCovariance& cov, double degenerate_ratio) {
  if (cov.channels < 2) throw std::invalid_argument("beamforming requires >= 2 channels");
  const std::size_t m = cov.channels;

  BeamformerWeights weights;
  weights.channels = m;
  weights.bins = cov.bins;
  weights.w.assign(cov.bins * m, cplx(0.0, 0.0));
  weights.degenerate.assign(cov.bins, 0);

  double mean_trace = 0.0;
  for (std::size_t k = 0; k < cov.bins; ++k) mean_trace += cov.trace(k);
  mean_trace /= static_cast<double>(cov.bins);

  std::vector<cplx> v(m), av(m);
  for (std::size_t k = 0; k < cov.bins; ++k) {
    const double tr = cov.trace(k);
    if (!(tr > degenerate_ratio * mean_trace) || !(tr > 0.0)) {
      weights.at(k, 0) = cplx(1.0, 0.0);
      weights.degenerate[k] = 1;
      continue;
    }

    // Start from the column with the largest norm; its overlap with the
    // dominant eigenvector is bounded away from zero for PSD input.
    std::size_t col = 0;
    double best_norm = -1.0;
    for (std::size_t c = 0; c < m; ++c) {
      double nn = 0.0;
      for (std::size_t r = 0; r < m; ++r) nn += std::norm(cov.at(k, r, c));
      if (nn > best_norm) {
        best_norm = nn;
        col = c;
      }
    }
    for (std::size_t r = 0; r < m; ++r) v[r] = cov.at(k, r, col);

    // Stop once the eigenvalue settles AND the eigen-residual meets the
    // advertised tolerance; the eigenvalue converges quadratically, so on
    // its own it would stall the iteration while the vector still trails.
    double lambda_prev = 0.0;
    for (std::size_t iter = 0; iter < kPowerIterMax; ++iter) {
      double nn = 0.0;
      for (const auto& x : v) nn += std::norm(x);
      const double inv = 1.0 / std::sqrt(nn);
      for (auto& x : v) x *= inv;

      for (std::size_t r = 0; r < m; ++r) {
        cplx sum(0.0, 0.0);
        for (std::size_t c = 0; c < m; ++c) sum += cov.at(k, r, c) * v[c];
        av[r] = sum;
      }
      double lambda = 0.0;
      for (std::size_t r = 0; r < m; ++r) lambda += (std::conj(v[r]) * av[r]).real();

      double residual2 = 0.0;
      for (std::size_t r = 0; r < m; ++r) residual2 += std::norm(av[r] - lambda * v[r]);
      const double tol = 1e-8 * std::max(lambda, tr / static_cast<double>(m));

      const bool lambda_settled =
          iter > 0 && std::abs(lambda - lambda_prev) < kPowerIterRelTol * std::abs(lambda);
      if (lambda_settled && residual2 <= tol * tol) break;
      v = av;
      lambda_prev = lambda;
    }

    double nn = 0.0;
    for (const auto& x : v) nn += std::norm(x);
    if (nn <= 0.0) {
      weights.at(k, 0) = cplx(1.0, 0.0);
      weights.degenerate[k] = 1;
      continue;
    }
    const double inv = 1.0 / std::sqrt(nn);
    for (auto& x : v) x *= inv;
    normalize_phase(v);
    for (std::size_t r = 0; r < m; ++r) weights.at(k, r) = v[r];
  }
  return weights;
}

MultiChannelSpectrogram apply_beamformer(const BeamformerWeights& weights,
                                         const MultiChannelSpectrogram& spec) {
  if (weights.channels != spec.channels || weights.bins != spec.n_bins) {
    throw std::invalid_argument("weights do not match spectrogram shape");
  }
  MultiChannelSpectrogram out;
  out.params = spec.params;
  out.channels = 1;
  out.n_frames = spec.n_frames;
  out.n_bins = spec.n_bins;
  out.data.assign(out.n_frames * out.n_bins, cplx(0.0, 0.0));

  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    for (std::size_t k = 0; k < spec.n_bins; ++k) {
      cplx sum(0.0, 0.0);
      for (std::size_t m = 0; m < spec.channels; ++m) {
        sum += std::conj(weights.at(k, m)) * spec.at(m, f, k);
      }
      out.at(0, f, k) = sum;
    }
  }
  return out;
}

BeamformerWeights adapt_lms_mvdr(const BeamformerWeights& weights, const MultiChannelSpectrogram& spec,
                                 FrameRange frames, double step, const SubbandCovariance& noise_cov) {
  if (step <= 0.0) throw std::invalid_argument("lms step must be positive");
  if (weights.channels != spec.channels || weights.bins != spec.n_bins) {
    throw std::invalid_argument("weights do not match spectrogram shape");
  }
  if (noise_cov.channels != weights.channels || noise_cov.bins != weights.bins) {
    throw std::invalid_argument("noise covariance does not match weights shape");
  }
  if (frames.end > spec.n_frames) throw std::invalid_argument("frame range out of bounds");

  constexpr double kStepEps = 1e-6;
  const std::size_t m = weights.channels;

  double mean_noise_trace = 0.0;
  for (std::size_t k = 0; k < noise_cov.bins; ++k) mean_noise_trace += noise_cov.trace(k);
  mean_noise_trace /= static_cast<double>(noise_cov.bins);

  BeamformerWeights out = weights;
  std::vector<cplx> w(m), d(m), y(m);
  for (std::size_t k = 0; k < weights.bins; ++k) {
    if (weights.degenerate[k]) continue;
    if (!(noise_cov.trace(k) > kNoiseTraceRatio * mean_noise_trace)) continue;

    for (std::size_t r = 0; r < m; ++r) {
      d[r] = weights.at(k, r);
      w[r] = weights.at(k, r);
    }
    double d_norm2 = 0.0;
    for (const auto& x : d) d_norm2 += std::norm(x);
    if (d_norm2 <= 0.0) continue;

    for (std::size_t f = frames.begin; f < frames.end; ++f) {
      double y_norm2 = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        y[r] = spec.at(r, f, k);
        y_norm2 += std::norm(y[r]);
      }
      if (y_norm2 == 0.0) continue;  // no data, no update
      cplx output(0.0, 0.0);
      for (std::size_t r = 0; r < m; ++r) output += std::conj(w[r]) * y[r];

      const double mu = step / (kStepEps + y_norm2);
      for (std::size_t r = 0; r < m; ++r) w[r] -= mu * y[r] * std::conj(output);

      // Re-project onto the distortionless constraint W^H d = 1.
      cplx dhw(0.0, 0.0);
      for (std::size_t r = 0; r < m; ++r) dhw += std::conj(d[r]) * w[r];
      const cplx violation = (dhw - cplx(1.0, 0.0)) / d_norm2;
      for (std::size_t r = 0; r < m; ++r) w[r] -= d[r] * violation;
    }
    for (std::size_t r = 0; r < m; ++r) out.at(k, r) = w[r];
  }
  return out;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("truncated weights sidecar");
  return v;
}

}  // namespace

void write_weights(const std::string& path, const BeamformerWeights& weights) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot create weights sidecar: " + path);
  put_u32(out, static_cast<std::uint32_t>(weights.bins));
  put_u32(out, static_cast<std::uint32_t>(weights.channels));
  for (const auto& v : weights.w) {
    const double re = v.real(), im = v.imag();
    out.write(reinterpret_cast<const char*>(&re), sizeof(re));
    out.write(reinterpret_cast<const char*>(&im), sizeof(im));
  }
  if (!out) throw std::runtime_error("failed writing weights sidecar: " + path);
}

BeamformerWeights read_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weights sidecar: " + path);
  BeamformerWeights weights;
  weights.bins = get_u32(in);
  weights.channels = get_u32(in);
  weights.w.resize(weights.bins * weights.channels);
  weights.degenerate.assign(weights.bins, 0);
  for (auto& v : weights.w) {
    double re = 0.0, im = 0.0;
    in.read(reinterpret_cast<char*>(&re), sizeof(re));
    in.read(reinterpret_cast<char*>(&im), sizeof(im));
    if (!in) throw std::runtime_error("truncated weights sidecar: " + path);
    v = cplx(re, im);
  }
  return weights;
}

}  // namespace enhance
