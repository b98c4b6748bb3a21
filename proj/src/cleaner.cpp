#include "enhance/cleaner.h"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "enhance/hermitian.h"

namespace enhance {

DelayLine::DelayLine(std::size_t aux_channels, std::size_t bins, std::size_t taps)
    : aux_(aux_channels), bins_(bins), taps_(taps) {
  if (taps_ == 0) throw std::invalid_argument("delay line needs at least one tap");
  ring_.assign(taps_ * aux_ * bins_, cplx(0.0, 0.0));
}

void DelayLine::reset() {
  std::fill(ring_.begin(), ring_.end(), cplx(0.0, 0.0));
  head_ = 0;
}

void DelayLine::push(const MultiChannelSpectrogram& spec, std::size_t frame, std::size_t ref_channel) {
  head_ = (head_ + taps_ - 1) % taps_;
  std::size_t aux = 0;
  for (std::size_t ch = 0; ch < spec.channels; ++ch) {
    if (ch == ref_channel) continue;
    const auto src = spec.frame(ch, frame);
    cplx* dst = ring_.data() + (head_ * aux_ + aux) * bins_;
    std::copy(src.begin(), src.end(), dst);
    ++aux;
  }
}

cplx DelayLine::tap(std::size_t aux, std::size_t bin, std::size_t lag) const {
  const std::size_t slot = (head_ + lag) % taps_;
  return ring_[(slot * aux_ + aux) * bins_ + bin];
}

void DelayLine::regressor(std::size_t bin, std::span<cplx> out) const {
  std::size_t i = 0;
  for (std::size_t aux = 0; aux < aux_; ++aux) {
    for (std::size_t lag = 0; lag < taps_; ++lag) out[i++] = tap(aux, bin, lag);
  }
}

CleanerFilterBank::CleanerFilterBank(std::size_t channels, std::size_t bins, CleanerConfig config)
    : channels_(channels), bins_(bins), dim_((channels - 1) * config.taps), config_(config) {
  if (channels_ < 2) throw std::invalid_argument("speech cleaner requires >= 2 channels");
  if (config_.taps == 0) throw std::invalid_argument("tap count must be >= 1");
  if (config_.reference_channel >= channels_) throw std::invalid_argument("reference channel out of range");
  if (!(config_.forgetting > 0.0 && config_.forgetting <= 1.0)) {
    throw std::invalid_argument("forgetting factor must be in (0, 1]");
  }
  if (!(config_.delta > 0.0)) throw std::invalid_argument("delta must be positive");

  taps_.assign(bins_ * dim_, cplx(0.0, 0.0));
  p_.assign(bins_ * dim_ * dim_, cplx(0.0, 0.0));
  const double p0 = 1.0 / config_.delta;
  for (std::size_t k = 0; k < bins_; ++k) {
    for (std::size_t i = 0; i < dim_; ++i) p_[(k * dim_ + i) * dim_ + i] = cplx(p0, 0.0);
  }
}

cplx CleanerFilterBank::tap(std::size_t bin, std::size_t aux, std::size_t lag) const {
  return taps_[bin * dim_ + aux * config_.taps + lag];
}

void CleanerFilterBank::set_taps(std::span<const cplx> taps) {
  if (frozen_) throw std::runtime_error("filter frozen");
  if (taps.size() != taps_.size()) throw std::invalid_argument("tap array size mismatch");
  std::copy(taps.begin(), taps.end(), taps_.begin());
}

void CleanerFilterBank::output(const DelayLine& delay, std::span<const cplx> ref_bins,
                               std::span<cplx> out) const {
  if (ref_bins.size() != bins_ || out.size() != bins_) throw std::invalid_argument("bin count mismatch");
  std::vector<cplx> u(dim_);
  for (std::size_t k = 0; k < bins_; ++k) {
    delay.regressor(k, u);
    cplx predicted(0.0, 0.0);
    const cplx* w = taps_.data() + k * dim_;
    for (std::size_t i = 0; i < dim_; ++i) predicted += std::conj(w[i]) * u[i];
    out[k] = ref_bins[k] - predicted;
  }
}

void CleanerFilterBank::adapt(const MultiChannelSpectrogram& spec, FrameRange context) {
  if (frozen_) throw std::runtime_error("filter frozen");
  if (spec.channels != channels_ || spec.n_bins != bins_) throw std::invalid_argument("spectrogram shape mismatch");
  if (context.empty() || context.end > spec.n_frames) throw std::invalid_argument("no frames in segment");

  const double lambda = config_.forgetting;
  const std::size_t ref = config_.reference_channel;

  DelayLine delay(channels_ - 1, bins_, config_.taps);
  const std::size_t lead = std::min<std::size_t>(config_.taps - 1, context.begin);
  for (std::size_t f = context.begin - lead; f < context.begin; ++f) delay.push(spec, f, ref);

  std::vector<cplx> u(dim_), pu(dim_), k_gain(dim_), uhp(dim_);
  for (std::size_t f = context.begin; f < context.end; ++f) {
    delay.push(spec, f, ref);
    for (std::size_t k = 0; k < bins_; ++k) {
      delay.regressor(k, u);
      cplx* w = taps_.data() + k * dim_;
      cplx* p = p_.data() + k * dim_ * dim_;

      // A priori error e = d - w^H u.
      cplx predicted(0.0, 0.0);
      for (std::size_t i = 0; i < dim_; ++i) predicted += std::conj(w[i]) * u[i];
      const cplx err = spec.at(ref, f, k) - predicted;

      // Gain k = P u / (lambda + u^H P u).
      double uhpu = 0.0;
      for (std::size_t r = 0; r < dim_; ++r) {
        cplx sum(0.0, 0.0);
        for (std::size_t c = 0; c < dim_; ++c) sum += p[r * dim_ + c] * u[c];
        pu[r] = sum;
      }
      for (std::size_t i = 0; i < dim_; ++i) uhpu += (std::conj(u[i]) * pu[i]).real();
      const double denom = lambda + uhpu;
      for (std::size_t i = 0; i < dim_; ++i) k_gain[i] = pu[i] / denom;

      for (std::size_t i = 0; i < dim_; ++i) w[i] += k_gain[i] * std::conj(err);

      // P <- (P - k u^H P) / lambda; u^H P = (P u)^H by hermiticity.
      for (std::size_t c = 0; c < dim_; ++c) uhp[c] = std::conj(pu[c]);
      const double inv_lambda = 1.0 / lambda;
      for (std::size_t r = 0; r < dim_; ++r) {
        for (std::size_t c = 0; c < dim_; ++c) {
          p[r * dim_ + c] = (p[r * dim_ + c] - k_gain[r] * uhp[c]) * inv_lambda;
        }
      }
      // Keep P Hermitian against rounding drift.
      for (std::size_t r = 0; r < dim_; ++r) {
        p[r * dim_ + r] = cplx(p[r * dim_ + r].real(), 0.0);
        for (std::size_t c = r + 1; c < dim_; ++c) {
          const cplx avg = 0.5 * (p[r * dim_ + c] + std::conj(p[c * dim_ + r]));
          p[r * dim_ + c] = avg;
          p[c * dim_ + r] = std::conj(avg);
        }
      }
    }
  }
}

void CleanerFilterBank::freeze() {
  frozen_ = true;
  p_.clear();
  p_.shrink_to_fit();
}

MultiChannelSpectrogram CleanerFilterBank::apply(const MultiChannelSpectrogram& spec, FrameRange frames) const {
  if (!frozen_) throw std::runtime_error("cleaner bank must be frozen before application");
  if (spec.channels != channels_ || spec.n_bins != bins_) throw std::invalid_argument("spectrogram shape mismatch");
  if (frames.empty() || frames.end > spec.n_frames) throw std::invalid_argument("no frames in segment");

  const std::size_t ref = config_.reference_channel;
  DelayLine delay(channels_ - 1, bins_, config_.taps);
  const std::size_t lead = std::min<std::size_t>(config_.taps - 1, frames.begin);
  for (std::size_t f = frames.begin - lead; f < frames.begin; ++f) delay.push(spec, f, ref);

  MultiChannelSpectrogram out;
  out.params = spec.params;
  out.channels = 1;
  out.n_frames = frames.size();
  out.n_bins = bins_;
  out.data.resize(out.n_frames * out.n_bins);

  for (std::size_t f = frames.begin; f < frames.end; ++f) {
    delay.push(spec, f, ref);
    output(delay, spec.frame(ref, f), out.frame(0, f - frames.begin));
  }
  return out;
}

double CleanerFilterBank::min_p_eigenvalue() const {
  if (frozen_ || p_.empty()) throw std::runtime_error("RLS state discarded");
  HermitianEig eig(dim_);
  double min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < bins_; ++k) {
    eig.decompose({p_.data() + k * dim_ * dim_, dim_ * dim_});
    min_eig = std::min(min_eig, eig.values.back());
  }
  return min_eig;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("truncated tap sidecar");
  return v;
}

}  // namespace

void write_taps(const std::string& path, const CleanerFilterBank& bank) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot create tap sidecar: " + path);
  put_u32(out, static_cast<std::uint32_t>(bank.bins()));
  put_u32(out, static_cast<std::uint32_t>(bank.channels() - 1));
  put_u32(out, static_cast<std::uint32_t>(bank.config().taps));
  for (const auto& v : bank.taps_flat()) {
    const double re = v.real(), im = v.imag();
    out.write(reinterpret_cast<const char*>(&re), sizeof(re));
    out.write(reinterpret_cast<const char*>(&im), sizeof(im));
  }
  if (!out) throw std::runtime_error("failed writing tap sidecar: " + path);
}

void read_taps(const std::string& path, CleanerFilterBank& bank) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open tap sidecar: " + path);
  const auto bins = get_u32(in);
  const auto aux = get_u32(in);
  const auto taps = get_u32(in);
  if (bins != bank.bins() || aux != bank.channels() - 1 || taps != bank.config().taps) {
    throw std::runtime_error("tap sidecar shape mismatch: " + path);
  }
  std::vector<cplx> flat(static_cast<std::size_t>(bins) * aux * taps);
  for (auto& v : flat) {
    double re = 0.0, im = 0.0;
    in.read(reinterpret_cast<char*>(&re), sizeof(re));
    in.read(reinterpret_cast<char*>(&im), sizeof(im));
    if (!in) throw std::runtime_error("truncated tap sidecar: " + path);
    v = cplx(re, im);
  }
  bank.set_taps(flat);
}

}  // namespace enhance
