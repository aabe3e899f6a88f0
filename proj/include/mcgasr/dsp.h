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

#ifndef MCGASR_DSP_H_
#define MCGASR_DSP_H_

#include <complex>
#include <string>
#include <vector>

#include "mcgasr/common.h"

namespace mcgasr {

struct Waveform {
  std::vector<double> samples;  // [-1, 1)
  int sample_rate = 16000;
};

// 16-bit signed little-endian PCM, mono.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w);

struct StftConfig {
  double win_ms = 32.0;
  double hop_ms = 8.0;
  int n_fft = 512;  // power of two; window length must not exceed it
};

// Frames-by-bins complex spectrogram, onesided (n_fft/2 + 1 bins).
struct Spectrogram {
  Index frames = 0;
  Index bins = 0;
  std::vector<std::complex<double>> data;  // row-major frames x bins
  int sample_rate = 16000;
  StftConfig cfg;

  std::complex<double> at(Index f, Index k) const {
    return data[static_cast<size_t>(f * bins + k)];
  }
};

// Hann-windowed (periodic) short-time DFT. Frame f starts at sample f*hop;
// T = 1 + floor((N - win_len)/hop).
Spectrogram stft(const Waveform& w, const StftConfig& cfg);

enum class FilterbankScale { kMel, kBark };

struct FbankConfig {
  Index q = 80;
  double f_min = 0.0;
  double f_max = 0.0;  // 0 means Nyquist
  double floor_eps = 1e-10;
  FilterbankScale scale = FilterbankScale::kMel;
};

// Triangular filters, linear in Hz between scale-spaced edge frequencies,
// evaluated at FFT bin centers. Rows q, columns n_fft/2 + 1, unnormalized.
std::vector<std::vector<double>> make_filterbank(FilterbankScale scale, Index q, int n_fft,
                                                 int sample_rate, double f_min, double f_max);

double hz_to_mel(double hz);
double mel_to_hz(double mel);
double hz_to_bark(double hz);
double bark_to_hz(double bark);

struct LogFbank {
  Index t = 0;
  Index q = 0;
  std::vector<double> values;  // row-major t x q
  StftConfig frame_params;
  int sample_rate = 16000;

  double at(Index ti, Index qi) const { return values[static_cast<size_t>(ti * q + qi)]; }
  double& at(Index ti, Index qi) { return values[static_cast<size_t>(ti * q + qi)]; }
};

// log(max(filterbank . |spec|^2, floor_eps))
LogFbank log_fbank(const Spectrogram& spec, const FbankConfig& cfg);

LogFbank wav_to_log_fbank(const Waveform& w, const StftConfig& stft_cfg, const FbankConfig& cfg);

// Feature dump: header (T, Q, frame params, sample rate) then row-major f32.
void write_features(const std::string& path, const LogFbank& f);
LogFbank read_features(const std::string& path);

}  // namespace mcgasr

#endif  // MCGASR_DSP_H_
