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

#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "mcgasr/dsp.h"
#include "mcgasr/rng.h"

using namespace mcgasr;

namespace {

constexpr double kPi = std::numbers::pi;

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Waveform sine(double freq_hz, double seconds, int sr = 16000, double amp = 0.5) {
  Waveform w;
  w.sample_rate = sr;
  auto n = static_cast<size_t>(seconds * sr);
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    w.samples[i] = amp * std::sin(2.0 * kPi * freq_hz * static_cast<double>(i) / sr);
  }
  return w;
}

// Independent closed form: the windowed DFT of cos(2*pi*k0*n/N) under a
// periodic Hann window of length N is exactly N/4 at bin k0, -N/8 at k0 +- 1,
// mirrored at N - k0, and zero elsewhere (for 2 <= k0 <= N/2 - 2).
std::vector<std::complex<double>> hann_cosine_dft_oracle(int n, int k0) {
  std::vector<std::complex<double>> X(static_cast<size_t>(n), {0.0, 0.0});
  X[static_cast<size_t>(k0)] = n / 4.0;
  X[static_cast<size_t>(k0 - 1)] = -n / 8.0;
  X[static_cast<size_t>(k0 + 1)] = -n / 8.0;
  X[static_cast<size_t>(n - k0)] = n / 4.0;
  X[static_cast<size_t>(n - k0 - 1)] = -n / 8.0;
  X[static_cast<size_t>(n - k0 + 1)] = -n / 8.0;
  return X;
}

}  // namespace

TEST_CASE("stft of a bin-centered cosine matches the closed-form oracle") {
  const int N = 512;
  const int k0 = 37;
  Waveform w;
  w.sample_rate = 16000;
  w.samples.resize(N);
  for (int i = 0; i < N; ++i) w.samples[static_cast<size_t>(i)] = std::cos(2.0 * kPi * k0 * i / N);

  auto spec = stft(w, {32.0, 8.0, 512});
  REQUIRE(spec.frames == 1);
  REQUIRE(spec.bins == 257);

  auto oracle = hann_cosine_dft_oracle(N, k0);
  for (Index k = 0; k < spec.bins; ++k) {
    CHECK(std::abs(spec.at(0, k) - oracle[static_cast<size_t>(k)]) < 1e-9);
  }

  // a Hann window spreads a bin-centered tone over a three-bin main lobe;
  // that lobe carries effectively all the frame energy
  double total = 0.0, lobe = 0.0;
  for (Index k = 0; k < spec.bins; ++k) {
    double e = std::norm(spec.at(0, k));
    total += e;
    if (k >= k0 - 1 && k <= k0 + 1) lobe += e;
  }
  CHECK(lobe / total >= 0.999);
  // and the center bin alone carries the 2/3 share the closed form predicts
  CHECK(std::norm(spec.at(0, k0)) / total == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("stft basic properties") {
  SUBCASE("zero signal gives a zero spectrogram") {
    Waveform w;
    w.samples.assign(16000, 0.0);
    auto spec = stft(w, {});
    for (const auto& v : spec.data) CHECK(std::abs(v) == 0.0);
  }
  SUBCASE("frame count follows 1 + floor((N - win)/hop)") {
    Waveform w;
    w.samples.assign(16000, 0.0);  // 1 s, win 512, hop 128
    auto spec = stft(w, {});
    CHECK(spec.frames == 1 + (16000 - 512) / 128);
  }
  SUBCASE("linearity in the input") {
    auto w = sine(440.0, 0.1);
    auto w2 = w;
    for (auto& s : w2.samples) s *= 3.0;
    auto a = stft(w, {});
    auto b = stft(w2, {});
    for (size_t i = 0; i < a.data.size(); ++i) {
      CHECK(std::abs(b.data[i] - 3.0 * a.data[i]) < 1e-9);
    }
  }
  SUBCASE("shift by one hop shifts frames by one") {
    Rng rng(5);
    Waveform w;
    w.samples.resize(4096);
    for (auto& s : w.samples) s = rng.uniform(-0.5, 0.5);
    Waveform shifted;
    shifted.sample_rate = w.sample_rate;
    shifted.samples.assign(w.samples.begin() + 128, w.samples.end());
    auto a = stft(w, {});
    auto b = stft(shifted, {});
    for (Index f = 0; f < b.frames; ++f) {
      for (Index k = 0; k < b.bins; ++k) {
        CHECK(std::abs(b.at(f, k) - a.at(f + 1, k)) < 1e-6);
      }
    }
  }
  SUBCASE("signal shorter than a window is rejected") {
    Waveform w;
    w.samples.assign(100, 0.0);
    CHECK_THROWS_AS(stft(w, {}), ConfigError);
  }
  SUBCASE("non power-of-two fft size is rejected") {
    Waveform w;
    w.samples.assign(16000, 0.0);
    CHECK_THROWS_AS(stft(w, {32.0, 8.0, 500}), ConfigError);
  }
}

TEST_CASE("filterbank matches an independently derived table") {
  const int n_fft = 512;
  const int sr = 16000;
  const Index q = 80;
  auto fb = make_filterbank(FilterbankScale::kMel, q, n_fft, sr, 0.0, 0.0);
  REQUIRE(fb.size() == 80);
  REQUIRE(fb[0].size() == 257);

  // oracle built from first principles: edges equally spaced in mel, each
  // weight the clipped min of the two edge-line expressions
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto imel = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const double lo = mel(0.0), hi = mel(sr / 2.0);
  std::vector<double> edges(static_cast<size_t>(q) + 2);
  for (size_t i = 0; i < edges.size(); ++i) {
    edges[i] = imel(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(q + 1));
  }
  double max_diff = 0.0;
  for (Index i = 0; i < q; ++i) {
    double row_sum = 0.0, oracle_sum = 0.0;
    for (Index k = 0; k < 257; ++k) {
      double f = static_cast<double>(k) * sr / n_fft;
      double rising = (f - edges[static_cast<size_t>(i)]) /
                      (edges[static_cast<size_t>(i) + 1] - edges[static_cast<size_t>(i)]);
      double falling = (edges[static_cast<size_t>(i) + 2] - f) /
                       (edges[static_cast<size_t>(i) + 2] - edges[static_cast<size_t>(i) + 1]);
      double oracle = std::max(0.0, std::min(rising, falling));
      max_diff = std::max(max_diff,
                          std::abs(fb[static_cast<size_t>(i)][static_cast<size_t>(k)] - oracle));
      row_sum += fb[static_cast<size_t>(i)][static_cast<size_t>(k)];
      oracle_sum += oracle;
    }
    CHECK(row_sum == doctest::Approx(oracle_sum).epsilon(1e-12));
    if (row_sum > 0.0) {
      // the peak bin sits within one bin spacing of the filter's center
      Index peak = 0;
      for (Index k = 1; k < 257; ++k) {
        if (fb[static_cast<size_t>(i)][static_cast<size_t>(k)] >
            fb[static_cast<size_t>(i)][static_cast<size_t>(peak)]) {
          peak = k;
        }
      }
      double f_peak = static_cast<double>(peak) * sr / n_fft;
      CHECK(std::abs(f_peak - edges[static_cast<size_t>(i) + 1]) <=
            static_cast<double>(sr) / n_fft + 1e-9);
    }
  }
  CHECK(max_diff < 1e-12);

  int nonzero_rows = 0;
  for (const auto& row : fb) {
    double s = 0;
    for (double v : row) s += v;
    if (s > 0) ++nonzero_rows;
  }
  CHECK(nonzero_rows >= 76);  // a few of the narrowest low bands may miss every bin

  CHECK_THROWS_AS(make_filterbank(FilterbankScale::kMel, 300, 512, 16000, 0, 0), ConfigError);
  CHECK_THROWS_AS(make_filterbank(FilterbankScale::kMel, 10, 512, 16000, 9000, 10000),
                  ConfigError);
}

TEST_CASE("bark scale option produces a valid, different filterbank") {
  auto mel = make_filterbank(FilterbankScale::kMel, 20, 512, 16000, 0, 0);
  auto bark = make_filterbank(FilterbankScale::kBark, 20, 512, 16000, 0, 0);
  CHECK(hz_to_bark(bark_to_hz(5.0)) == doctest::Approx(5.0));
  CHECK(mel_to_hz(hz_to_mel(1234.0)) == doctest::Approx(1234.0));
  double diff = 0;
  for (size_t i = 0; i < mel.size(); ++i) {
    for (size_t k = 0; k < mel[i].size(); ++k) diff += std::abs(mel[i][k] - bark[i][k]);
  }
  CHECK(diff > 1.0);
}

TEST_CASE("log_fbank values") {
  SUBCASE("zero signal hits the floor everywhere") {
    Waveform w;
    w.samples.assign(4096, 0.0);
    auto f = wav_to_log_fbank(w, {}, {40, 0, 0, 1e-10, FilterbankScale::kMel});
    CHECK(f.q == 40);
    for (double v : f.values) CHECK(v == doctest::Approx(std::log(1e-10)));
  }
  SUBCASE("white noise gives finite values bounded by total frame energy") {
    Rng rng(9);
    Waveform w;
    w.samples.resize(4096);
    for (auto& s : w.samples) s = rng.uniform(-0.5, 0.5);
    auto spec = stft(w, {});
    auto f = log_fbank(spec, {40, 0, 0, 1e-10, FilterbankScale::kMel});
    for (Index t = 0; t < f.t; ++t) {
      double frame_energy = 0.0;
      for (Index k = 0; k < spec.bins; ++k) frame_energy += std::norm(spec.at(t, k));
      for (Index qi = 0; qi < f.q; ++qi) {
        CHECK(std::isfinite(f.at(t, qi)));
        CHECK(f.at(t, qi) <= std::log(frame_energy) + 1e-9);
      }
    }
  }
  SUBCASE("determinism: same bytes in, same bytes out") {
    auto w = sine(700.0, 0.2);
    auto a = wav_to_log_fbank(w, {}, {});
    auto b = wav_to_log_fbank(w, {}, {});
    CHECK(a.values == b.values);
  }
}

TEST_CASE("wav roundtrip and error handling") {
  auto w = sine(440.0, 0.05);
  auto path = temp_path("mcgasr_wav_test.wav");
  write_wav(path, w);
  auto back = read_wav(path);
  CHECK(back.sample_rate == 16000);
  REQUIRE(back.samples.size() == w.samples.size());
  for (size_t i = 0; i < w.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - w.samples[i]) <= 1.0 / 32768.0);
  }
  std::filesystem::remove(path);

  CHECK_THROWS_AS(read_wav("/nonexistent/file.wav"), IoError);

  auto bad = temp_path("mcgasr_not_wav.wav");
  {
    std::ofstream os(bad, std::ios::binary);
    os << "this is not a wav file at all, just text padding......";
  }
  CHECK_THROWS_AS(read_wav(bad), IoError);
  std::filesystem::remove(bad);
}

TEST_CASE("feature dump roundtrip") {
  auto w = sine(520.0, 0.1);
  auto f = wav_to_log_fbank(w, {}, {40, 0, 0, 1e-10, FilterbankScale::kMel});
  auto path = temp_path("mcgasr_feat_test.bin");
  write_features(path, f);
  auto back = read_features(path);
  CHECK(back.t == f.t);
  CHECK(back.q == f.q);
  CHECK(back.frame_params.n_fft == 512);
  CHECK(back.sample_rate == 16000);
  for (size_t i = 0; i < f.values.size(); ++i) {
    CHECK(back.values[i] == doctest::Approx(f.values[i]).epsilon(1e-5));
  }
  std::filesystem::remove(path);
}
