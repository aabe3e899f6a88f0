// Copyright 2026 The mcgasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mcgasr/dsp.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "mcgasr/io_util.h"

namespace mcgasr {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 DIT FFT.
void fft_inplace(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * kPi / static_cast<double>(len);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        auto u = a[i + k];
        auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// WAV IO (PCM16 mono)
// ---------------------------------------------------------------------------

Waveform read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(str_cat("wav: cannot open '", path, "'"));
  char riff[4], wave[4];
  is.read(riff, 4);
  auto riff_size = read_pod<std::uint32_t>(is, "RIFF size");
  (void)riff_size;
  is.read(wave, 4);
  if (!is || std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(wave, "WAVE", 4) != 0) {
    throw IoError(str_cat("wav: '", path, "' is not a RIFF/WAVE file"));
  }
  Waveform w;
  bool have_fmt = false;
  while (is) {
    char id[4];
    is.read(id, 4);
    if (!is) break;
    auto chunk_size = read_pod<std::uint32_t>(is, "chunk size");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      auto format = read_pod<std::uint16_t>(is, "format tag");
      auto channels = read_pod<std::uint16_t>(is, "channels");
      auto rate = read_pod<std::uint32_t>(is, "sample rate");
      read_pod<std::uint32_t>(is, "byte rate");
      read_pod<std::uint16_t>(is, "block align");
      auto bits = read_pod<std::uint16_t>(is, "bits per sample");
      if (format != 1 || bits != 16) {
        throw IoError(str_cat("wav: '", path, "' must be 16-bit PCM (format ", format, ", ",
                              bits, " bits)"));
      }
      if (channels != 1) throw IoError(str_cat("wav: '", path, "' must be mono"));
      w.sample_rate = static_cast<int>(rate);
      have_fmt = true;
      if (chunk_size > 16) is.seekg(chunk_size - 16, std::ios::cur);
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw IoError(str_cat("wav: '", path, "' data before fmt chunk"));
      size_t n = chunk_size / 2;
      std::vector<std::int16_t> pcm;
      read_vec(is, pcm, n, "wav samples");
      w.samples.resize(n);
      for (size_t i = 0; i < n; ++i) w.samples[i] = static_cast<double>(pcm[i]) / 32768.0;
      return w;
    } else {
      // skip unknown chunk (word-aligned)
      is.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  throw IoError(str_cat("wav: '", path, "' has no data chunk"));
}

void write_wav(const std::string& path, const Waveform& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(str_cat("wav: cannot open '", path, "' for writing"));
  std::vector<std::int16_t> pcm(w.samples.size());
  for (size_t i = 0; i < w.samples.size(); ++i) {
    double v = std::clamp(w.samples[i], -1.0, 32767.0 / 32768.0);
    pcm[i] = static_cast<std::int16_t>(std::lrint(v * 32768.0));
  }
  std::uint32_t data_bytes = static_cast<std::uint32_t>(pcm.size() * 2);
  os.write("RIFF", 4);
  write_pod<std::uint32_t>(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  write_pod<std::uint32_t>(os, 16);
  write_pod<std::uint16_t>(os, 1);  // PCM
  write_pod<std::uint16_t>(os, 1);  // mono
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(w.sample_rate));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(w.sample_rate * 2));
  write_pod<std::uint16_t>(os, 2);
  write_pod<std::uint16_t>(os, 16);
  os.write("data", 4);
  write_pod<std::uint32_t>(os, data_bytes);
  write_vec(os, pcm);
  if (!os) throw IoError(str_cat("wav: write failed for '", path, "'"));
}

// ---------------------------------------------------------------------------
// STFT
// ---------------------------------------------------------------------------

Spectrogram stft(const Waveform& w, const StftConfig& cfg) {
  if (w.sample_rate <= 0) throw ConfigError("stft: sample rate must be positive");
  if (!is_pow2(cfg.n_fft)) throw ConfigError(str_cat("stft: n_fft ", cfg.n_fft, " not a power of two"));
  const Index win = static_cast<Index>(std::lrint(cfg.win_ms * w.sample_rate / 1000.0));
  const Index hop = static_cast<Index>(std::lrint(cfg.hop_ms * w.sample_rate / 1000.0));
  if (win <= 0 || hop <= 0) throw ConfigError("stft: window and hop must be positive");
  if (win > cfg.n_fft) {
    throw ConfigError(str_cat("stft: window of ", win, " samples exceeds n_fft ", cfg.n_fft));
  }
  const Index n = static_cast<Index>(w.samples.size());
  if (n < win) {
    throw ConfigError(str_cat("stft: signal of ", n, " samples shorter than one ", win,
                              "-sample window"));
  }
  const Index frames = 1 + (n - win) / hop;
  const Index bins = cfg.n_fft / 2 + 1;

  // periodic Hann; with win == n_fft a bin-centered sinusoid lands exactly on
  // three adjacent bins
  std::vector<double> window(static_cast<size_t>(win));
  for (Index i = 0; i < win; ++i) {
    window[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                                          static_cast<double>(win));
  }

  Spectrogram out;
  out.frames = frames;
  out.bins = bins;
  out.sample_rate = w.sample_rate;
  out.cfg = cfg;
  out.data.resize(static_cast<size_t>(frames * bins));
  std::vector<std::complex<double>> buf(static_cast<size_t>(cfg.n_fft));
  for (Index f = 0; f < frames; ++f) {
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    const double* src = w.samples.data() + f * hop;
    for (Index i = 0; i < win; ++i) {
      buf[static_cast<size_t>(i)] = src[i] * window[static_cast<size_t>(i)];
    }
    fft_inplace(buf);
    std::copy_n(buf.begin(), bins, out.data.begin() + f * bins);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Filterbank
// ---------------------------------------------------------------------------

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }
// Traunmueller's Bark approximation and its inverse.
double hz_to_bark(double hz) { return 26.81 * hz / (1960.0 + hz) - 0.53; }
double bark_to_hz(double bark) { return 1960.0 * (bark + 0.53) / (26.28 - bark); }

std::vector<std::vector<double>> make_filterbank(FilterbankScale scale, Index q, int n_fft,
                                                 int sample_rate, double f_min, double f_max) {
  if (q < 1) throw ConfigError("filterbank: q must be >= 1");
  const Index bins = n_fft / 2 + 1;
  if (q > bins) {
    throw ConfigError(str_cat("filterbank: q ", q, " exceeds ", bins, " FFT bins"));
  }
  if (f_max <= 0.0) f_max = sample_rate / 2.0;
  if (!(f_min >= 0.0) || !(f_max > f_min) || f_max > sample_rate / 2.0 + 1e-9) {
    throw ConfigError(str_cat("filterbank: bad band [", f_min, ", ", f_max, "] at rate ",
                              sample_rate));
  }
  auto fwd = scale == FilterbankScale::kMel ? hz_to_mel : hz_to_bark;
  auto inv = scale == FilterbankScale::kMel ? mel_to_hz : bark_to_hz;
  const double lo = fwd(f_min);
  const double hi = fwd(f_max);
  std::vector<double> edges(static_cast<size_t>(q) + 2);
  for (Index i = 0; i < q + 2; ++i) {
    edges[static_cast<size_t>(i)] =
        inv(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(q + 1));
  }
  std::vector<std::vector<double>> fb(static_cast<size_t>(q),
                                      std::vector<double>(static_cast<size_t>(bins), 0.0));
  for (Index i = 0; i < q; ++i) {
    const double left = edges[static_cast<size_t>(i)];
    const double center = edges[static_cast<size_t>(i) + 1];
    const double right = edges[static_cast<size_t>(i) + 2];
    for (Index k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      double wgt = 0.0;
      if (f > left && f < center) {
        wgt = (f - left) / (center - left);
      } else if (f == center) {
        wgt = 1.0;
      } else if (f > center && f < right) {
        wgt = (right - f) / (right - center);
      }
      fb[static_cast<size_t>(i)][static_cast<size_t>(k)] = wgt;
    }
  }
  return fb;
}

LogFbank log_fbank(const Spectrogram& spec, const FbankConfig& cfg) {
  auto fb = make_filterbank(cfg.scale, cfg.q, spec.cfg.n_fft, spec.sample_rate, cfg.f_min,
                            cfg.f_max);
  LogFbank out;
  out.t = spec.frames;
  out.q = cfg.q;
  out.frame_params = spec.cfg;
  out.sample_rate = spec.sample_rate;
  out.values.resize(static_cast<size_t>(spec.frames * cfg.q));
  std::vector<double> power(static_cast<size_t>(spec.bins));
  for (Index f = 0; f < spec.frames; ++f) {
    for (Index k = 0; k < spec.bins; ++k) {
      power[static_cast<size_t>(k)] = std::norm(spec.at(f, k));
    }
    for (Index i = 0; i < cfg.q; ++i) {
      const auto& row = fb[static_cast<size_t>(i)];
      double acc = 0.0;
      for (Index k = 0; k < spec.bins; ++k) acc += row[static_cast<size_t>(k)] * power[static_cast<size_t>(k)];
      out.at(f, i) = std::log(std::max(acc, cfg.floor_eps));
    }
  }
  return out;
}

LogFbank wav_to_log_fbank(const Waveform& w, const StftConfig& stft_cfg, const FbankConfig& cfg) {
  return log_fbank(stft(w, stft_cfg), cfg);
}

// ---------------------------------------------------------------------------
// Feature dump
// ---------------------------------------------------------------------------

namespace {
constexpr char kFeatMagic[9] = "MCGASRFT";
constexpr std::uint32_t kFeatVersion = 1;
}  // namespace

void write_features(const std::string& path, const LogFbank& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(str_cat("features: cannot open '", path, "' for writing"));
  os.write(kFeatMagic, 8);
  write_pod<std::uint32_t>(os, kFeatVersion);
  write_pod<std::int64_t>(os, f.t);
  write_pod<std::int64_t>(os, f.q);
  write_pod<double>(os, f.frame_params.win_ms);
  write_pod<double>(os, f.frame_params.hop_ms);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(f.frame_params.n_fft));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(f.sample_rate));
  std::vector<float> v(f.values.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(f.values[i]);
  write_vec(os, v);
  if (!os) throw IoError(str_cat("features: write failed for '", path, "'"));
}

LogFbank read_features(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(str_cat("features: cannot open '", path, "'"));
  expect_magic(is, kFeatMagic, "feature dump");
  auto version = read_pod<std::uint32_t>(is, "feature version");
  if (version != kFeatVersion) throw IoError(str_cat("features: unsupported version ", version));
  LogFbank f;
  f.t = read_pod<std::int64_t>(is, "frame count");
  f.q = read_pod<std::int64_t>(is, "bin count");
  f.frame_params.win_ms = read_pod<double>(is, "window ms");
  f.frame_params.hop_ms = read_pod<double>(is, "hop ms");
  f.frame_params.n_fft = static_cast<int>(read_pod<std::uint32_t>(is, "n_fft"));
  f.sample_rate = static_cast<int>(read_pod<std::uint32_t>(is, "sample rate"));
  if (f.t < 0 || f.q <= 0) throw IoError("features: invalid header");
  std::vector<float> v;
  read_vec(is, v, static_cast<size_t>(f.t * f.q), "feature payload");
  f.values.assign(v.begin(), v.end());
  return f;
}

}  // namespace mcgasr
