# Copyright 2026 The mcgasr Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Confidence-gated speech enhancement and CTC recognition primitives."""

from mcgasr._mcgasr import (
    ConfigError,
    IoError,
    NumericError,
    ShapeError,
    corpus_stats,
    ctc_nll,
    gate_labels,
    greedy_decode,
    log_fbank,
    mix_at_snr,
    read_wav,
    render_tokens,
    si_sdr,
    wer_align,
    write_wav,
)

__all__ = [
    "ConfigError",
    "IoError",
    "NumericError",
    "ShapeError",
    "corpus_stats",
    "ctc_nll",
    "gate_labels",
    "greedy_decode",
    "log_fbank",
    "mix_at_snr",
    "read_wav",
    "render_tokens",
    "si_sdr",
    "wer_align",
    "write_wav",
]
