// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ites/bundle.hpp"
#include "ites/segmentation.hpp"

namespace ites::transcription {

/// Speech-to-text over a range of the demonstration's audio. Implementations
/// throw on failure; the session records the failure and leaves the
/// transcript empty for the user to fill in.
class TranscriptionBackend {
 public:
  virtual ~TranscriptionBackend() = default;
  virtual std::string transcribe(const segmentation::SampleRange& range) = 0;
};

/// Deterministic backend that replays a bundled utterance script: returns the
/// utterances whose start sample falls inside the range, joined by a space.
class ScriptedTranscription final : public TranscriptionBackend {
 public:
  ScriptedTranscription(std::vector<bundle::Utterance> utterances, double audio_rate)
      : utterances_(std::move(utterances)), audio_rate_(audio_rate) {}

  std::string transcribe(const segmentation::SampleRange& range) override;

 private:
  std::vector<bundle::Utterance> utterances_;
  double audio_rate_;
};

/// Adapter for an external speech service: POSTs the 16-bit PCM slice as
/// `application/octet-stream` to `<url>` with `X-Sample-Rate` and expects a
/// `text/plain` transcript. Requires the bundle to carry audio.
/// Defined in the service library.
std::unique_ptr<TranscriptionBackend> make_http_backend(std::string url,
                                                        std::shared_ptr<const bundle::DemoBundle> bundle);

}  // namespace ites::transcription
