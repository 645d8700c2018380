// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ites/recognition.hpp"
#include "ites/segmentation.hpp"
#include "ites/skillparams.hpp"

namespace ites::bundle {

inline constexpr std::string_view kManifestName = "manifest.txt";
inline constexpr std::string_view kManifestFormat = "ites-bundle v1";

/// Parsed manifest of a recorded demonstration. Paths are relative to the
/// bundle directory.
struct Manifest {
  std::string id;
  std::string created;  // free text, copied into task-model metadata
  double video_rate = 30.0;
  double audio_rate = 48000.0;
  std::optional<std::int64_t> audio_samples;
  skillparams::CameraIntrinsics intrinsics;
  std::string frames;  // list file, one frame path per line
  std::optional<std::string> audio;
  std::optional<std::string> signal;
  std::optional<std::string> transcripts;
  std::vector<std::string> tracks;
  std::optional<std::string> objects;
  std::optional<std::string> grasp_priors;
  std::optional<std::string> grasp_scores;
  std::optional<std::string> model;
  segmentation::Config segmentation;
  double track_confidence = 0.5;
  double hinge_max_rms = 0.05;
};

/// Parses `key = value` lines. Throws Error(BadRequest) naming the field.
Manifest parse_manifest(std::string_view text);
std::string format_manifest(const Manifest& m);

// ---------------------------------------------------------------------------
// Audio

struct PcmAudio {
  double sample_rate = 48000.0;
  std::vector<std::int16_t> samples;
};

/// 16-bit mono PCM WAV only.
PcmAudio decode_wav(std::string_view bytes);
std::string encode_wav(const PcmAudio& audio);

// ---------------------------------------------------------------------------
// Transcript script

/// Utterance spoken at `time` seconds from the start of the recording.
struct Utterance {
  double time = 0.0;
  std::string text;
};

/// TSV `time<TAB>text` with header row.
std::vector<Utterance> parse_transcript_script(std::string_view text);
std::string format_transcript_script(const std::vector<Utterance>& utterances);

// ---------------------------------------------------------------------------

/// A validated bundle with every referenced resource loaded except the frame
/// rasters, which are streamed on demand.
struct DemoBundle {
  std::filesystem::path dir;
  Manifest manifest;
  std::string manifest_text;
  std::vector<std::filesystem::path> frame_paths;  // absolute
  std::int64_t audio_sample_count = 0;
  std::optional<PcmAudio> audio;
  std::optional<segmentation::MotionSignal> signal;
  std::vector<Utterance> utterances;
  std::optional<skillparams::DetectionTrack> track;
  std::vector<std::string> object_vocabulary;
  std::optional<skillparams::GraspPriorTable> grasp_priors;
  std::optional<skillparams::GraspScores> grasp_scores;
  std::shared_ptr<const recognition::TaskClassifier> classifier;

  int frame_count() const { return static_cast<int>(frame_paths.size()); }
};

/// Loads and validates a bundle directory. Throws Error(NotFound,
/// "bundle not found") for a missing directory and Error(BadRequest) naming
/// the offending manifest field otherwise.
std::shared_ptr<const DemoBundle> load(const std::filesystem::path& dir);

/// Raw luminance signal of the bundle: the precomputed signal when present,
/// otherwise computed from the frames. The sample rate is the manifest video
/// rate in both cases.
segmentation::MotionSignal raw_signal(const DemoBundle& b);

}  // namespace ites::bundle
