#ifndef MBSC_WAV_HPP
#define MBSC_WAV_HPP

#include <stdexcept>
#include <string>

#include "mbsc/audio.hpp"

namespace mbsc {

struct WavError : std::runtime_error {
    explicit WavError(const std::string& what) : std::runtime_error(what) {}
};

enum class WavFormat { pcm16, float32 };

// Reads a mono RIFF/WAVE file holding 16-bit PCM or 32-bit float samples.
// Anything else (stereo, other bit depths, damaged chunks) is a WavError.
AudioBuffer read_wav(const std::string& path);

// Writes a mono file in the requested sample format. pcm16 clamps to
// [-1, 1] and rounds; float32 stores samples as-is.
void write_wav(const std::string& path, const AudioBuffer& audio,
               WavFormat format = WavFormat::pcm16);

} // namespace mbsc

#endif
