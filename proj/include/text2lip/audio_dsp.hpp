#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace t2l {

struct Waveform {
  std::vector<double> samples;  // [-1, 1]
  int sample_rate = 16000;
};

enum class FeatureOrigin { real, pseudo, zero };
std::string origin_name(FeatureOrigin o);
FeatureOrigin origin_from_name(const std::string& name);

struct AudioFeatureSequence {
  std::vector<double> frames;  // row-major n x d
  int n = 0;
  int d = 0;
  double frame_hop_s = 0.0;
  FeatureOrigin origin = FeatureOrigin::real;

  double at(int i, int j) const { return frames[static_cast<std::size_t>(i) * d + j]; }
};

struct MfccConfig {
  double window_s = 0.025;
  double hop_s = 0.010;
  int n_mels = 26;
  int n_coeffs = 13;
  double preemphasis = 0.97;
  double log_floor = 1e-10;
};

// RIFF/WAVE PCM16 mono or stereo; stereo mixes down to mono, 48 kHz input
// is resampled to the internal 16 kHz rate. Anything else: FormatError.
Waveform load_wav(const std::filesystem::path& path);

// Windowed-sinc low-pass then decimate by 3.
Waveform resample_48k_to_16k(const Waveform& w);

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<double>& re, std::vector<double>& im);

// Triangular mel filterbank on FFT bin centers, HTK mel scale,
// row-major (n_mels x (nfft/2 + 1)).
std::vector<double> mel_filter_weights(int n_mels, int nfft, int sample_rate);

struct PowerSpectrum {
  std::vector<double> frames;  // row-major n x bins
  int n = 0;
  int bins = 0;
  int nfft = 0;
};

// Pre-emphasis, Hann-windowed framing, power spectrum per frame.
// Frame count n = floor((len - window) / hop) + 1; EmptyInput when the
// waveform is shorter than one window.
PowerSpectrum power_frames(const Waveform& w, const MfccConfig& cfg);

// Log mel filterbank energies (n x n_mels), the stage before the DCT.
AudioFeatureSequence log_mel(const Waveform& w, const MfccConfig& cfg);

// Full chain: log-mel then orthonormal DCT-II, keeping the first n_coeffs.
AudioFeatureSequence mfcc(const Waveform& w, const MfccConfig& cfg);

// Binary matrix (float64 LE) + JSON sidecar {n, d, hop_s, origin}. The
// sidecar sits next to the matrix as <path>.json.
void write_features(const std::filesystem::path& bin_path,
                    const AudioFeatureSequence& f);
AudioFeatureSequence read_features(const std::filesystem::path& bin_path);
void write_features_csv(const std::filesystem::path& path,
                        const AudioFeatureSequence& f);

}  // namespace t2l
