#include "intentsieve/dsp.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "intentsieve/error.hpp"

namespace isv::dsp {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_waveform(const Waveform& w) {
  if (w.samples.empty()) throw InvalidInput("empty waveform");
  if (w.sample_rate_hz <= 0) throw InvalidInput("non-positive sample rate");
  for (double s : w.samples)
    if (!std::isfinite(s)) throw InvalidInput("non-finite sample in waveform");
}

/// Mirror an out-of-range index back into [0, n) without repeating the edge
/// sample (numpy 'reflect' semantics), bouncing as many times as needed for
/// signals shorter than the pad.
std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  std::int64_t m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Process-wide cache of FFTW real-to-complex plans keyed by FFT length.
/// Plan creation is not thread-safe in FFTW; execution on distinct buffers
/// is, so extraction stays callable from any thread.
class FftPlanCache {
 public:
  static fftw_plan get(int n_fft) {
    static FftPlanCache cache;
    std::lock_guard<std::mutex> lock(cache.mutex_);
    auto it = cache.plans_.find(n_fft);
    if (it != cache.plans_.end()) return it->second;
    double* in = fftw_alloc_real(static_cast<std::size_t>(n_fft));
    fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(n_fft / 2 + 1));
    fftw_plan plan = fftw_plan_dft_r2c_1d(n_fft, in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (!plan) throw InvalidConfig("could not create FFT plan for n_fft=" + std::to_string(n_fft));
    cache.plans_.emplace(n_fft, plan);
    return plan;
  }

 private:
  ~FftPlanCache() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }
  std::mutex mutex_;
  std::map<int, fftw_plan> plans_;
};

struct FftwBuffers {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  FftwBuffers(int n_fft, int bins) {
    in = fftw_alloc_real(static_cast<std::size_t>(n_fft));
    out = fftw_alloc_complex(static_cast<std::size_t>(bins));
  }
  ~FftwBuffers() {
    fftw_free(in);
    fftw_free(out);
  }
  FftwBuffers(const FftwBuffers&) = delete;
  FftwBuffers& operator=(const FftwBuffers&) = delete;
};

}  // namespace

void FeatureConfig::validate() const {
  if (n_fft <= 0) throw InvalidConfig("n_fft must be positive");
  if (hop <= 0) throw InvalidConfig("hop must be positive");
  if (hop > n_fft) throw InvalidConfig("hop must not exceed n_fft");
  if (n_mels <= 0) throw InvalidConfig("n_mels must be positive");
  if (n_mels > n_fft / 2 + 1)
    throw InvalidConfig("n_mels " + std::to_string(n_mels) + " exceeds FFT bin count " +
                        std::to_string(n_fft / 2 + 1));
  if (tail_frames <= 0) throw InvalidConfig("tail_frames must be positive");
  if (sample_rate_hz <= 0) throw InvalidConfig("sample_rate_hz must be positive");
}

std::int64_t frame_count(std::int64_t n_samples, int hop) {
  return 1 + n_samples / hop;
}

std::vector<double> stft_magnitude(const Waveform& w, const FeatureConfig& cfg,
                                   std::int64_t* out_frames, int* out_bins) {
  cfg.validate();
  check_waveform(w);

  const int n_fft = cfg.n_fft;
  const int bins = n_fft / 2 + 1;
  const std::int64_t n = static_cast<std::int64_t>(w.samples.size());
  const std::int64_t frames = frame_count(n, cfg.hop);
  const std::int64_t pad = n_fft / 2;

  // Periodic Hann window.
  std::vector<double> window(static_cast<std::size_t>(n_fft));
  for (int j = 0; j < n_fft; ++j)
    window[static_cast<std::size_t>(j)] = 0.5 * (1.0 - std::cos(kTwoPi * j / n_fft));

  fftw_plan plan = FftPlanCache::get(n_fft);
  FftwBuffers buf(n_fft, bins);

  std::vector<double> mag(static_cast<std::size_t>(frames) * bins);
  for (std::int64_t t = 0; t < frames; ++t) {
    const std::int64_t start = t * cfg.hop - pad;
    for (int j = 0; j < n_fft; ++j) {
      const std::int64_t idx = reflect_index(start + j, n);
      buf.in[j] = w.samples[static_cast<std::size_t>(idx)] * window[static_cast<std::size_t>(j)];
    }
    fftw_execute_dft_r2c(plan, buf.in, buf.out);
    double* row = mag.data() + static_cast<std::size_t>(t) * bins;
    for (int k = 0; k < bins; ++k)
      row[k] = std::hypot(buf.out[k][0], buf.out[k][1]);
  }

  *out_frames = frames;
  *out_bins = bins;
  return mag;
}

std::vector<double> mel_filterbank(const FeatureConfig& cfg) {
  cfg.validate();
  const int bins = cfg.n_fft / 2 + 1;
  const int n_mels = cfg.n_mels;

  // Filter edge frequencies, equally spaced on the mel scale.
  std::vector<double> edges(static_cast<std::size_t>(n_mels) + 2);
  const double mel_hi = hz_to_mel(cfg.sample_rate_hz / 2.0);
  for (int m = 0; m < n_mels + 2; ++m)
    edges[static_cast<std::size_t>(m)] = mel_to_hz(mel_hi * m / (n_mels + 1));

  std::vector<double> fb(static_cast<std::size_t>(n_mels) * bins, 0.0);
  const double bin_hz = static_cast<double>(cfg.sample_rate_hz) / cfg.n_fft;
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double center = edges[static_cast<std::size_t>(m) + 1];
    const double hi = edges[static_cast<std::size_t>(m) + 2];
    const double up = std::max(center - lo, 1e-12);
    const double down = std::max(hi - center, 1e-12);
    double* row = fb.data() + static_cast<std::size_t>(m) * bins;
    bool any = false;
    for (int k = 0; k < bins; ++k) {
      const double f = k * bin_hz;
      const double wgt = std::min((f - lo) / up, (hi - f) / down);
      if (wgt > 0.0) {
        row[k] = wgt;
        any = true;
      }
    }
    if (!any) {
      // Filter narrower than the bin spacing: keep its center bin.
      int k = static_cast<int>(std::lround(center / bin_hz));
      k = std::min(std::max(k, 0), bins - 1);
      row[k] = 1.0;
    }
  }
  return fb;
}

std::vector<double> energy_contour(const Waveform& w, const FeatureConfig& cfg) {
  cfg.validate();
  check_waveform(w);

  const std::int64_t n = static_cast<std::int64_t>(w.samples.size());
  const std::int64_t frames = frame_count(n, cfg.hop);
  const std::int64_t pad = cfg.n_fft / 2;

  std::vector<double> rms(static_cast<std::size_t>(frames));
  for (std::int64_t t = 0; t < frames; ++t) {
    const std::int64_t start = t * cfg.hop - pad;
    double acc = 0.0;
    for (int j = 0; j < cfg.n_fft; ++j) {
      const double s = w.samples[static_cast<std::size_t>(reflect_index(start + j, n))];
      acc += s * s;
    }
    rms[static_cast<std::size_t>(t)] = std::sqrt(acc / cfg.n_fft);
  }
  return rms;
}

AcousticFeature extract_feature(const Waveform& w, const FeatureConfig& cfg) {
  std::int64_t frames = 0;
  int bins = 0;
  std::vector<double> mag = stft_magnitude(w, cfg, &frames, &bins);
  std::vector<double> fb = mel_filterbank(cfg);
  std::vector<double> energy = energy_contour(w, cfg);

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> mag_m(mag.data(), frames, bins);
  Eigen::Map<const RowMat> fb_m(fb.data(), cfg.n_mels, bins);
  RowMat mel = mag_m * fb_m.transpose();  // (frames, n_mels)

  AcousticFeature out;
  out.rows = cfg.tail_frames;
  out.cols = cfg.n_mels + 1;
  out.valid_frames = static_cast<int>(std::min<std::int64_t>(frames, cfg.tail_frames));
  out.matrix.assign(static_cast<std::size_t>(out.rows) * out.cols, 0.0);

  const std::int64_t first_kept = frames - out.valid_frames;
  const int row0 = out.rows - out.valid_frames;
  for (int r = 0; r < out.valid_frames; ++r) {
    const std::int64_t f = first_kept + r;
    double* dst = out.matrix.data() + static_cast<std::size_t>(row0 + r) * out.cols;
    for (int m = 0; m < cfg.n_mels; ++m) {
      double v = mel(f, m);
      dst[m] = cfg.apply_log ? std::log(v + 1e-10) : v;
    }
    dst[cfg.n_mels] = energy[static_cast<std::size_t>(f)];
  }
  return out;
}

}  // namespace isv::dsp
