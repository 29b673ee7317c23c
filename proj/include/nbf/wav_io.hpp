#pragma once

#include <string>

#include "nbf/wave.hpp"

namespace nbf {

enum class WavFormat { Pcm16, Float32 };

/// RIFF/WAVE reader. PCM-16 and IEEE float-32, little-endian, interleaved.
WaveBuffer load_wav(const std::string& path);

void save_wav(const std::string& path, const WaveBuffer& wave,
              WavFormat format = WavFormat::Float32);

}  // namespace nbf
