#ifndef INTENTSIEVE_DSP_HPP
#define INTENTSIEVE_DSP_HPP

#include <cstdint>
#include <vector>

namespace isv::dsp {

/// Mono audio signal. Samples are real amplitudes, typically in [-1, 1).
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 16000;
};

/// Knobs of the acoustic front end. Defaults produce the (300, 129)
/// mel-plus-energy feature the models consume.
struct FeatureConfig {
  int n_fft = 2048;          ///< FFT window length (samples)
  int hop = 512;             ///< hop between frames (samples)
  int n_mels = 128;          ///< mel filter count
  int tail_frames = 300;     ///< rows kept from the end of the utterance
  bool apply_log = false;    ///< log-compress mel magnitudes
  int sample_rate_hz = 16000;

  void validate() const;  // throws InvalidConfig
};

/// Fixed-size acoustic feature: tail_frames rows of n_mels mel magnitudes
/// plus one trailing RMS-energy column. Shorter utterances are zero-padded
/// at the top so sentence-final frames always sit at the bottom rows.
struct AcousticFeature {
  int rows = 0;
  int cols = 0;
  int valid_frames = 0;          ///< trailing rows holding real frames
  std::vector<double> matrix;    ///< row-major, rows x cols

  double at(int r, int c) const { return matrix[static_cast<std::size_t>(r) * cols + c]; }
  double& at(int r, int c) { return matrix[static_cast<std::size_t>(r) * cols + c]; }
};

/// Number of centered frames for a signal of `n_samples`: 1 + floor(n/hop).
std::int64_t frame_count(std::int64_t n_samples, int hop);

/// Magnitude STFT with centered framing: the signal is reflection-padded by
/// n_fft/2 on both sides and each frame is Hann-windowed (periodic window).
/// Returns a row-major (frames, n_fft/2 + 1) matrix.
std::vector<double> stft_magnitude(const Waveform& w, const FeatureConfig& cfg,
                                   std::int64_t* out_frames, int* out_bins);

/// Triangular mel filterbank, (n_mels, n_fft/2 + 1) row-major. Filters span
/// 0 Hz to sample_rate/2 on the HTK mel scale m = 2595 log10(1 + f/700).
/// A filter too narrow to touch any FFT bin gets weight 1 at the bin
/// nearest its center so every filter has at least one nonzero weight.
std::vector<double> mel_filterbank(const FeatureConfig& cfg);

/// Per-frame RMS energy over the same centered (unwindowed) frames used by
/// stft_magnitude.
std::vector<double> energy_contour(const Waveform& w, const FeatureConfig& cfg);

/// Full front end: mel spectrogram + energy column, tail-windowed to
/// (tail_frames, n_mels + 1). With apply_log, mel magnitudes (not energy,
/// not padding rows) become log(x + 1e-10).
AcousticFeature extract_feature(const Waveform& w, const FeatureConfig& cfg);

}  // namespace isv::dsp

#endif  // INTENTSIEVE_DSP_HPP
