// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include "ites/transcription.hpp"

#include <cmath>

namespace ites::transcription {

std::string ScriptedTranscription::transcribe(const segmentation::SampleRange& range) {
  std::string out;
  for (const auto& u : utterances_) {
    const auto sample = static_cast<std::int64_t>(std::llround(u.time * audio_rate_));
    if (sample < range.begin || sample >= range.end) continue;
    if (!out.empty()) out += ' ';
    out += u.text;
  }
  return out;
}

}  // namespace ites::transcription
