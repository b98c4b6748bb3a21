// Minimal RIFF/WAVE reader and writer: PCM 16-bit and IEEE float 32-bit,
// interleaved, any channel count. Samples map to +-1.0 full scale.
#pragma once

#include <string>

#include "enhance/signal.h"

namespace enhance {

enum class WavFormat { Pcm16, Float32 };

MultiChannelWave read_wav(const std::string& path);

void write_wav(const std::string& path, const MultiChannelWave& wave,
               WavFormat format = WavFormat::Float32);

}  // namespace enhance
