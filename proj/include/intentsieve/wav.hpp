#ifndef INTENTSIEVE_WAV_HPP
#define INTENTSIEVE_WAV_HPP

#include <string>

#include "intentsieve/dsp.hpp"

namespace isv::dsp {

/// Read a 16-bit PCM mono WAV file. Samples are scaled to [-1, 1).
/// Stereo or non-PCM input is rejected with InvalidInput; malformed files
/// raise ParseError.
Waveform read_wav(const std::string& path);

/// Write a waveform as 16-bit PCM mono WAV (samples clamped to [-1, 1)).
void write_wav(const std::string& path, const Waveform& w);

}  // namespace isv::dsp

#endif  // INTENTSIEVE_WAV_HPP
