#include "text2lip/audio_dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <json.hpp>

#include "text2lip/errors.hpp"
#include "text2lip/io_util.hpp"

namespace t2l {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::uint32_t u32_at(const std::string& b, std::size_t at) {
  if (at + 4 > b.size()) throw FormatError("wav file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  return v;
}

std::uint16_t u16_at(const std::string& b, std::size_t at) {
  if (at + 2 > b.size()) throw FormatError("wav file truncated");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint16_t>(static_cast<unsigned char>(b[at + 1])) << 8;
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }
}  // namespace

std::string origin_name(FeatureOrigin o) {
  switch (o) {
    case FeatureOrigin::real: return "real";
    case FeatureOrigin::pseudo: return "pseudo";
    case FeatureOrigin::zero: return "zero";
  }
  return "real";
}

FeatureOrigin origin_from_name(const std::string& name) {
  if (name == "real") return FeatureOrigin::real;
  if (name == "pseudo") return FeatureOrigin::pseudo;
  if (name == "zero") return FeatureOrigin::zero;
  throw FormatError("unknown feature origin '" + name + "'");
}

Waveform load_wav(const std::filesystem::path& path) {
  std::string b = read_file(path);
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0)
    throw FormatError(path.string() + ": not a RIFF/WAVE file");

  int channels = 0, sample_rate = 0, bits = 0;
  bool have_fmt = false;
  std::size_t data_at = 0, data_len = 0;

  std::size_t at = 12;
  while (at + 8 <= b.size()) {
    std::string id = b.substr(at, 4);
    std::uint32_t len = u32_at(b, at + 4);
    std::size_t body = at + 8;
    if (body + len > b.size())
      throw FormatError(path.string() + ": truncated chunk '" + id + "'");
    if (id == "fmt ") {
      if (len < 16) throw FormatError(path.string() + ": short fmt chunk");
      std::uint16_t format = u16_at(b, body);
      channels = u16_at(b, body + 2);
      sample_rate = static_cast<int>(u32_at(b, body + 4));
      bits = u16_at(b, body + 14);
      if (format != 1)
        throw FormatError(path.string() + ": only PCM encoding is supported");
      if (bits != 16)
        throw FormatError(path.string() + ": only 16-bit samples are supported");
      if (channels != 1 && channels != 2)
        throw FormatError(path.string() + ": unsupported channel count " +
                          std::to_string(channels));
      have_fmt = true;
    } else if (id == "data") {
      data_at = body;
      data_len = len;
    }
    at = body + len + (len % 2);  // chunks are word-aligned
  }
  if (!have_fmt || data_at == 0)
    throw FormatError(path.string() + ": missing fmt or data chunk");
  if (sample_rate != 16000 && sample_rate != 48000)
    throw FormatError(path.string() + ": sample rate " +
                      std::to_string(sample_rate) +
                      " not supported (16 kHz or 48 kHz)");

  std::size_t frame_bytes = 2 * static_cast<std::size_t>(channels);
  std::size_t n = data_len / frame_bytes;
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      std::int16_t s;
      std::memcpy(&s, b.data() + data_at + i * frame_bytes + 2 * c, 2);
      acc += static_cast<double>(s) / 32768.0;
    }
    w.samples[i] = acc / channels;
  }
  if (sample_rate == 48000) w = resample_48k_to_16k(w);
  return w;
}

Waveform resample_48k_to_16k(const Waveform& w) {
  if (w.sample_rate != 48000)
    throw DataError("resample: input is not 48 kHz");
  constexpr int kTaps = 121;
  constexpr int kCenter = kTaps / 2;
  constexpr double kCutoffHz = 7000.0;
  static const std::vector<double> h = [] {
    std::vector<double> taps(kTaps);
    double sum = 0.0;
    for (int j = 0; j < kTaps; ++j) {
      double x = 2.0 * kCutoffHz / 48000.0 * (j - kCenter);
      double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
      double hann = 0.5 - 0.5 * std::cos(2.0 * kPi * j / (kTaps - 1));
      taps[j] = 2.0 * kCutoffHz / 48000.0 * sinc * hann;
      sum += taps[j];
    }
    for (double& t : taps) t /= sum;  // unit DC gain
    return taps;
  }();

  std::int64_t len = static_cast<std::int64_t>(w.samples.size());
  Waveform out;
  out.sample_rate = 16000;
  out.samples.resize((len + 2) / 3);
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(out.samples.size()); ++i) {
    double acc = 0.0;
    std::int64_t base = 3 * i - kCenter;
    for (int j = 0; j < kTaps; ++j) {
      std::int64_t t = base + j;
      if (t >= 0 && t < len) acc += h[j] * w.samples[t];
    }
    out.samples[i] = acc;
  }
  return out;
}

void fft_inplace(std::vector<double>& re, std::vector<double>& im) {
  std::size_t n = re.size();
  if (n == 0 || (n & (n - 1)) != 0 || im.size() != n)
    throw ShapeMismatch("fft size must be a power of two, got " +
                        std::to_string(n));
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * kPi / static_cast<double>(len);
    double wl_re = std::cos(ang), wl_im = std::sin(ang);
    for (std::size_t i = 0; i < n; i += len) {
      double w_re = 1.0, w_im = 0.0;
      for (std::size_t j = 0; j < len / 2; ++j) {
        std::size_t a = i + j, b = i + j + len / 2;
        double vr = re[b] * w_re - im[b] * w_im;
        double vi = re[b] * w_im + im[b] * w_re;
        re[b] = re[a] - vr;
        im[b] = im[a] - vi;
        re[a] += vr;
        im[a] += vi;
        double nw_re = w_re * wl_re - w_im * wl_im;
        w_im = w_re * wl_im + w_im * wl_re;
        w_re = nw_re;
      }
    }
  }
}

std::vector<double> mel_filter_weights(int n_mels, int nfft, int sample_rate) {
  int bins = nfft / 2 + 1;
  double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edge_hz(n_mels + 2);
  for (int j = 0; j < n_mels + 2; ++j)
    edge_hz[j] = mel_to_hz(mel_hi * j / (n_mels + 1));

  std::vector<double> weights(static_cast<std::size_t>(n_mels) * bins, 0.0);
  for (int m = 0; m < n_mels; ++m) {
    double left = edge_hz[m], center = edge_hz[m + 1], right = edge_hz[m + 2];
    for (int k = 0; k < bins; ++k) {
      double f = static_cast<double>(k) * sample_rate / nfft;
      double w = 0.0;
      if (f > left && f <= center)
        w = (f - left) / (center - left);
      else if (f > center && f < right)
        w = (right - f) / (right - center);
      weights[static_cast<std::size_t>(m) * bins + k] = w;
    }
  }
  return weights;
}

PowerSpectrum power_frames(const Waveform& w, const MfccConfig& cfg) {
  if (!(cfg.hop_s > 0.0) || cfg.window_s < cfg.hop_s)
    throw DataError("mfcc config requires window_s >= hop_s > 0");
  int window = static_cast<int>(std::lround(cfg.window_s * w.sample_rate));
  int hop = static_cast<int>(std::lround(cfg.hop_s * w.sample_rate));
  std::int64_t len = static_cast<std::int64_t>(w.samples.size());
  if (len < window)
    throw EmptyInput("waveform shorter than one analysis window (" +
                     std::to_string(len) + " < " + std::to_string(window) +
                     " samples)");

  std::vector<double> emphasized(w.samples);
  for (std::int64_t t = len - 1; t >= 1; --t)
    emphasized[t] -= cfg.preemphasis * emphasized[t - 1];

  std::vector<double> hann(window);
  for (int t = 0; t < window; ++t)
    hann[t] = 0.5 - 0.5 * std::cos(2.0 * kPi * t / (window - 1));

  PowerSpectrum out;
  out.nfft = next_pow2(window);
  out.bins = out.nfft / 2 + 1;
  out.n = static_cast<int>((len - window) / hop) + 1;
  out.frames.resize(static_cast<std::size_t>(out.n) * out.bins);

  std::vector<double> re(out.nfft), im(out.nfft);
  for (int i = 0; i < out.n; ++i) {
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    const double* x = emphasized.data() + static_cast<std::size_t>(i) * hop;
    for (int t = 0; t < window; ++t) re[t] = x[t] * hann[t];
    fft_inplace(re, im);
    double* row = out.frames.data() + static_cast<std::size_t>(i) * out.bins;
    for (int k = 0; k < out.bins; ++k) row[k] = re[k] * re[k] + im[k] * im[k];
  }
  return out;
}

AudioFeatureSequence log_mel(const Waveform& w, const MfccConfig& cfg) {
  PowerSpectrum ps = power_frames(w, cfg);
  std::vector<double> weights =
      mel_filter_weights(cfg.n_mels, ps.nfft, w.sample_rate);
  AudioFeatureSequence out;
  out.n = ps.n;
  out.d = cfg.n_mels;
  out.frame_hop_s = cfg.hop_s;
  out.origin = FeatureOrigin::real;
  out.frames.resize(static_cast<std::size_t>(out.n) * out.d);
  for (int i = 0; i < ps.n; ++i) {
    const double* p = ps.frames.data() + static_cast<std::size_t>(i) * ps.bins;
    double* row = out.frames.data() + static_cast<std::size_t>(i) * out.d;
    for (int m = 0; m < cfg.n_mels; ++m) {
      const double* wrow = weights.data() + static_cast<std::size_t>(m) * ps.bins;
      double e = 0.0;
      for (int k = 0; k < ps.bins; ++k) e += wrow[k] * p[k];
      row[m] = std::log(std::max(e, cfg.log_floor));
    }
  }
  return out;
}

AudioFeatureSequence mfcc(const Waveform& w, const MfccConfig& cfg) {
  if (cfg.n_coeffs > cfg.n_mels)
    throw DataError("mfcc config requires n_coeffs <= n_mels");
  AudioFeatureSequence lm = log_mel(w, cfg);
  AudioFeatureSequence out;
  out.n = lm.n;
  out.d = cfg.n_coeffs;
  out.frame_hop_s = cfg.hop_s;
  out.origin = FeatureOrigin::real;
  out.frames.resize(static_cast<std::size_t>(out.n) * out.d);
  int M = cfg.n_mels;
  // orthonormal DCT-II
  for (int i = 0; i < lm.n; ++i) {
    const double* row = lm.frames.data() + static_cast<std::size_t>(i) * M;
    double* c = out.frames.data() + static_cast<std::size_t>(i) * out.d;
    for (int k = 0; k < cfg.n_coeffs; ++k) {
      double acc = 0.0;
      for (int j = 0; j < M; ++j)
        acc += row[j] * std::cos(kPi * k * (2.0 * j + 1.0) / (2.0 * M));
      double scale = k == 0 ? std::sqrt(1.0 / M) : std::sqrt(2.0 / M);
      c[k] = scale * acc;
    }
  }
  return out;
}

void write_features(const std::filesystem::path& bin_path,
                    const AudioFeatureSequence& f) {
  std::string payload;
  append_f64_le(payload, f.frames.data(), f.frames.size());
  atomic_write_file(bin_path, payload);
  nlohmann::json sidecar = {{"n", f.n},
                            {"d", f.d},
                            {"hop_s", f.frame_hop_s},
                            {"origin", origin_name(f.origin)}};
  std::filesystem::path sidecar_path = bin_path;
  sidecar_path.replace_extension(".json");
  atomic_write_file(sidecar_path, sidecar.dump(2) + "\n");
}

AudioFeatureSequence read_features(const std::filesystem::path& bin_path) {
  std::filesystem::path sidecar_path = bin_path;
  sidecar_path.replace_extension(".json");
  nlohmann::json sidecar;
  try {
    sidecar = nlohmann::json::parse(read_file(sidecar_path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(sidecar_path.string() + ": bad sidecar: " + e.what());
  }
  AudioFeatureSequence f;
  f.n = sidecar.at("n").get<int>();
  f.d = sidecar.at("d").get<int>();
  f.frame_hop_s = sidecar.at("hop_s").get<double>();
  f.origin = origin_from_name(sidecar.value("origin", "real"));
  if (f.n < 0 || f.d <= 0)
    throw FormatError(sidecar_path.string() + ": bad dimensions");
  std::string payload = read_file(bin_path);
  if (payload.size() != static_cast<std::size_t>(f.n) * f.d * 8)
    throw FormatError(bin_path.string() + ": payload size does not match sidecar");
  f.frames.resize(static_cast<std::size_t>(f.n) * f.d);
  read_f64_le(payload, 0, f.frames.data(), f.frames.size());
  return f;
}

void write_features_csv(const std::filesystem::path& path,
                        const AudioFeatureSequence& f) {
  std::string out;
  for (int i = 0; i < f.n; ++i) {
    for (int j = 0; j < f.d; ++j) {
      if (j) out += ",";
      out += fmt_g17(f.at(i, j));
    }
    out += "\n";
  }
  atomic_write_file(path, out);
}

}  // namespace t2l
