#include "enhance/wav.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace enhance {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

template <typename T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("unexpected end of WAV file");
  return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
};

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

MultiChannelWave read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open WAV file: " + path);

  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0) throw std::runtime_error("not a RIFF file: " + path);
  read_le<std::uint32_t>(in);  // riff size, unused
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0) throw std::runtime_error("not a WAVE file: " + path);

  FmtChunk fmt;
  bool have_fmt = false;
  std::vector<char> payload;

  while (in.read(tag, 4)) {
    const auto chunk_size = read_le<std::uint32_t>(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      fmt.format = read_le<std::uint16_t>(in);
      fmt.channels = read_le<std::uint16_t>(in);
      fmt.sample_rate = read_le<std::uint32_t>(in);
      read_le<std::uint32_t>(in);  // byte rate
      read_le<std::uint16_t>(in);  // block align
      fmt.bits_per_sample = read_le<std::uint16_t>(in);
      std::size_t consumed = 16;
      if (fmt.format == kFormatExtensible && chunk_size >= 40) {
        read_le<std::uint16_t>(in);  // extension size
        read_le<std::uint16_t>(in);  // valid bits
        read_le<std::uint32_t>(in);  // channel mask
        fmt.format = read_le<std::uint16_t>(in);  // first two bytes of the sub-format GUID
        in.ignore(14);
        consumed = 40;
      }
      if (chunk_size > consumed) in.ignore(static_cast<std::streamsize>(chunk_size - consumed));
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      payload.resize(chunk_size);
      in.read(payload.data(), static_cast<std::streamsize>(chunk_size));
      if (!in) throw std::runtime_error("truncated data chunk: " + path);
    } else {
      in.ignore(static_cast<std::streamsize>(chunk_size + (chunk_size & 1)));
    }
  }

  if (!have_fmt) throw std::runtime_error("missing fmt chunk: " + path);
  if (payload.empty()) throw std::runtime_error("missing data chunk: " + path);
  if (fmt.channels == 0) throw std::runtime_error("zero channels: " + path);

  MultiChannelWave wave;
  wave.sample_rate = static_cast<int>(fmt.sample_rate);

  if (fmt.format == kFormatPcm && fmt.bits_per_sample == 16) {
    const std::size_t n = payload.size() / 2 / fmt.channels;
    wave.samples.assign(fmt.channels, std::vector<double>(n));
    const auto* p = reinterpret_cast<const std::int16_t*>(payload.data());
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t ch = 0; ch < fmt.channels; ++ch) {
        wave.samples[ch][t] = static_cast<double>(p[t * fmt.channels + ch]) / 32768.0;
      }
    }
  } else if (fmt.format == kFormatFloat && fmt.bits_per_sample == 32) {
    const std::size_t n = payload.size() / 4 / fmt.channels;
    wave.samples.assign(fmt.channels, std::vector<double>(n));
    const auto* p = reinterpret_cast<const float*>(payload.data());
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t ch = 0; ch < fmt.channels; ++ch) {
        wave.samples[ch][t] = static_cast<double>(p[t * fmt.channels + ch]);
      }
    }
  } else {
    throw std::runtime_error("unsupported WAV encoding (PCM16 or float32 only): " + path);
  }

  wave.validate();
  return wave;
}

void write_wav(const std::string& path, const MultiChannelWave& wave, WavFormat format) {
  wave.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot create WAV file: " + path);

  const std::uint16_t channels = static_cast<std::uint16_t>(wave.channel_count());
  const std::uint32_t rate = static_cast<std::uint32_t>(wave.sample_rate);
  const std::size_t n = wave.length();
  const std::uint16_t bytes_per_sample = format == WavFormat::Pcm16 ? 2 : 4;
  const std::uint32_t data_size = static_cast<std::uint32_t>(n * channels * bytes_per_sample);

  out.write("RIFF", 4);
  write_le<std::uint32_t>(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_le<std::uint32_t>(out, 16);
  write_le<std::uint16_t>(out, format == WavFormat::Pcm16 ? kFormatPcm : kFormatFloat);
  write_le<std::uint16_t>(out, channels);
  write_le<std::uint32_t>(out, rate);
  write_le<std::uint32_t>(out, rate * channels * bytes_per_sample);
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(channels * bytes_per_sample));
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(bytes_per_sample * 8));
  out.write("data", 4);
  write_le<std::uint32_t>(out, data_size);

  if (format == WavFormat::Pcm16) {
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t ch = 0; ch < channels; ++ch) {
        const double scaled = std::round(wave.samples[ch][t] * 32768.0);
        const double clipped = std::clamp(scaled, -32768.0, 32767.0);
        write_le<std::int16_t>(out, static_cast<std::int16_t>(clipped));
      }
    }
  } else {
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t ch = 0; ch < channels; ++ch) {
        write_le<float>(out, static_cast<float>(wave.samples[ch][t]));
      }
    }
  }
  if (!out) throw std::runtime_error("failed writing WAV file: " + path);
}

}  // namespace enhance
