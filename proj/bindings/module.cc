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

// Python bindings for the main operations: feature extraction, gate
// labeling, SNR mixing, CTC scoring, decoding, and evaluation metrics.
// Tensors cross the boundary as plain numpy arrays; the autodiff graph and
// the training loop stay on the C++ side behind the command line tool.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "mcgasr/common.h"
#include "mcgasr/ctc.h"
#include "mcgasr/data.h"
#include "mcgasr/dsp.h"
#include "mcgasr/gate_labels.h"
#include "mcgasr/metrics.h"
#include "mcgasr/tensor.h"

namespace py = pybind11;

namespace {

using mcgasr::FbankConfig;
using mcgasr::FilterbankScale;
using mcgasr::Index;
using mcgasr::LogFbank;
using mcgasr::StftConfig;
using mcgasr::Waveform;

Waveform to_waveform(const py::array_t<double>& samples, int sample_rate) {
  if (samples.ndim() != 1) throw mcgasr::ShapeError("samples must be a 1-d array");
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(samples.data(), samples.data() + samples.size());
  return w;
}

py::array_t<double> from_samples(const std::vector<double>& samples) {
  py::array_t<double> out(static_cast<py::ssize_t>(samples.size()));
  std::copy(samples.begin(), samples.end(), out.mutable_data());
  return out;
}

LogFbank to_log_fbank(const py::array_t<double>& feats) {
  if (feats.ndim() != 2) throw mcgasr::ShapeError("features must be a (t, q) array");
  LogFbank fb;
  fb.t = static_cast<Index>(feats.shape(0));
  fb.q = static_cast<Index>(feats.shape(1));
  fb.values.resize(static_cast<size_t>(fb.t * fb.q));
  auto r = feats.unchecked<2>();
  for (Index t = 0; t < fb.t; ++t) {
    for (Index q = 0; q < fb.q; ++q) {
      fb.values[static_cast<size_t>(t * fb.q + q)] = r(t, q);
    }
  }
  return fb;
}

FilterbankScale parse_scale(const std::string& scale) {
  if (scale == "mel") return FilterbankScale::kMel;
  if (scale == "bark") return FilterbankScale::kBark;
  throw mcgasr::ConfigError("scale must be 'mel' or 'bark'");
}

mcgasr::Tensor<double> to_logits(const py::array_t<double>& logits) {
  if (logits.ndim() != 2) throw mcgasr::ShapeError("logits must be a (t, v+1) array");
  std::vector<double> vals(static_cast<size_t>(logits.size()));
  auto r = logits.unchecked<2>();
  for (py::ssize_t t = 0; t < logits.shape(0); ++t) {
    for (py::ssize_t v = 0; v < logits.shape(1); ++v) {
      vals[static_cast<size_t>(t * logits.shape(1) + v)] = r(t, v);
    }
  }
  return mcgasr::Tensor<double>::from_data(
      {static_cast<Index>(logits.shape(0)), static_cast<Index>(logits.shape(1))},
      std::move(vals));
}

}  // namespace

PYBIND11_MODULE(_mcgasr, m) {
  m.doc() = "Confidence-gated speech enhancement and CTC recognition primitives";

  py::register_exception<mcgasr::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<mcgasr::ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<mcgasr::NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<mcgasr::IoError>(m, "IoError", PyExc_OSError);

  m.def(
      "log_fbank",
      [](const py::array_t<double>& samples, int sample_rate, Index q, double win_ms,
         double hop_ms, int n_fft, double f_min, double f_max, const std::string& scale) {
        StftConfig stft;
        stft.win_ms = win_ms;
        stft.hop_ms = hop_ms;
        stft.n_fft = n_fft;
        FbankConfig fbank;
        fbank.q = q;
        fbank.f_min = f_min;
        fbank.f_max = f_max;
        fbank.scale = parse_scale(scale);
        const LogFbank fb =
            mcgasr::wav_to_log_fbank(to_waveform(samples, sample_rate), stft, fbank);
        py::array_t<double> out({fb.t, fb.q});
        std::copy(fb.values.begin(), fb.values.end(), out.mutable_data());
        return out;
      },
      py::arg("samples"), py::arg("sample_rate") = 16000, py::arg("q") = 80,
      py::arg("win_ms") = 32.0, py::arg("hop_ms") = 8.0, py::arg("n_fft") = 512,
      py::arg("f_min") = 0.0, py::arg("f_max") = 0.0, py::arg("scale") = "mel",
      "Log filterbank features, shape (t, q), from a mono waveform.");

  m.def(
      "corpus_stats",
      [](const std::vector<py::array_t<double>>& clean_set) {
        std::vector<LogFbank> set;
        set.reserve(clean_set.size());
        for (const auto& f : clean_set) set.push_back(to_log_fbank(f));
        const mcgasr::CorpusStats stats = mcgasr::corpus_stats(set);
        return py::make_tuple(from_samples(stats.mu), from_samples(stats.sigma));
      },
      py::arg("clean_set"),
      "Per-band mean and deviation of per-clip time-means over clean features; "
      "returns (mu, sigma).");

  m.def(
      "gate_labels",
      [](const py::array_t<double>& clean_feats, const py::array_t<double>& mu,
         const py::array_t<double>& sigma, const std::vector<double>& epsilons) {
        const LogFbank fb = to_log_fbank(clean_feats);
        mcgasr::CorpusStats stats;
        stats.q = fb.q;
        stats.d = 1;
        stats.mu.assign(mu.data(), mu.data() + mu.size());
        stats.sigma.assign(sigma.data(), sigma.data() + sigma.size());
        const mcgasr::ThresholdSet th = mcgasr::make_thresholds(stats, epsilons);
        const std::vector<mcgasr::GateLabel> labels = mcgasr::make_gate_labels(fb, th);
        py::array_t<std::uint8_t> out(
            {static_cast<Index>(labels.size()), fb.t, fb.q});
        auto w = out.mutable_unchecked<3>();
        for (size_t i = 0; i < labels.size(); ++i) {
          for (Index t = 0; t < fb.t; ++t) {
            for (Index q = 0; q < fb.q; ++q) {
              w(static_cast<Index>(i), t, q) = labels[i].at(t, q);
            }
          }
        }
        return out;
      },
      py::arg("clean_feats"), py::arg("mu"), py::arg("sigma"), py::arg("epsilons"),
      "Binary speech-presence labels, shape (n, t, q), one slice per offset.");

  m.def(
      "mix_at_snr",
      [](const py::array_t<double>& clean, const py::array_t<double>& noise, double snr_db,
         int sample_rate, Index crop_offset) {
        mcgasr::MixSpec spec;
        spec.snr_db = snr_db;
        spec.crop_offset = crop_offset;
        const mcgasr::MixResult res = mcgasr::mix_at_snr(
            to_waveform(clean, sample_rate), to_waveform(noise, sample_rate), spec);
        return py::make_tuple(from_samples(res.mixture.samples), res.noise_gain, res.peak_gain);
      },
      py::arg("clean"), py::arg("noise"), py::arg("snr_db"), py::arg("sample_rate") = 16000,
      py::arg("crop_offset") = 0,
      "Mix noise into clean speech at the requested SNR; returns "
      "(mixture, noise_gain, peak_gain).");

  m.def(
      "ctc_nll",
      [](const py::array_t<double>& logits, const std::vector<Index>& target) {
        return mcgasr::ctc_loss(to_logits(logits), target).item();
      },
      py::arg("logits"), py::arg("target"),
      "Negative log-likelihood of the target under CTC; logits are (t, v+1) "
      "pre-softmax with blank at column 0.");

  m.def(
      "greedy_decode",
      [](const py::array_t<double>& logits) {
        return mcgasr::greedy_ctc_decode(to_logits(logits));
      },
      py::arg("logits"),
      "Frame argmax, collapse repeats, drop blanks; returns the token ids.");

  m.def(
      "wer_align",
      [](const std::vector<Index>& ref, const std::vector<Index>& hyp) {
        const mcgasr::AlignmentCounts c = mcgasr::wer_align(ref, hyp);
        py::dict out;
        out["sub"] = c.sub;
        out["del"] = c.del;
        out["ins"] = c.ins;
        out["ref_len"] = c.ref_len;
        out["wer"] = c.wer();
        return out;
      },
      py::arg("ref"), py::arg("hyp"),
      "Minimal edit alignment counts and the word error rate.");

  m.def(
      "si_sdr",
      [](const py::array_t<double>& reference, const py::array_t<double>& estimate) {
        std::vector<double> r(reference.data(), reference.data() + reference.size());
        std::vector<double> e(estimate.data(), estimate.data() + estimate.size());
        return mcgasr::si_sdr(r, e);
      },
      py::arg("reference"), py::arg("estimate"),
      "Scale-invariant signal-to-distortion ratio in dB.");

  m.def(
      "render_tokens",
      [](const std::vector<int>& tokens, double token_seconds, double gap_seconds,
         double edge_seconds, int sample_rate) {
        mcgasr::ToyCorpusConfig tc;
        tc.token_seconds = token_seconds;
        tc.gap_seconds = gap_seconds;
        tc.edge_seconds = edge_seconds;
        tc.sample_rate = sample_rate;
        return from_samples(mcgasr::render_tokens(tokens, tc).samples);
      },
      py::arg("tokens"), py::arg("token_seconds") = 0.12, py::arg("gap_seconds") = 0.03,
      py::arg("edge_seconds") = 0.05, py::arg("sample_rate") = 16000,
      "Deterministic synthetic utterance for the given token sequence.");

  m.def(
      "read_wav",
      [](const std::string& path) {
        const Waveform w = mcgasr::read_wav(path);
        return py::make_tuple(from_samples(w.samples), w.sample_rate);
      },
      py::arg("path"), "Read 16-bit PCM mono; returns (samples, sample_rate).");

  m.def(
      "write_wav",
      [](const std::string& path, const py::array_t<double>& samples, int sample_rate) {
        mcgasr::write_wav(path, to_waveform(samples, sample_rate));
      },
      py::arg("path"), py::arg("samples"), py::arg("sample_rate") = 16000,
      "Write 16-bit PCM mono.");
}
