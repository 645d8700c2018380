// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ites::segmentation {

/// 8-bit luminance image, row-major.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> luma;
  double timestamp = 0.0;  // seconds

  std::uint8_t at(int x, int y) const { return luma[static_cast<std::size_t>(y) * width + x]; }
};

/// Real-valued image produced by spatial_smooth.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// One value per adjacent frame pair; values[t] measures the change between
/// frames t and t+1 and is reported at frame index t.
struct MotionSignal {
  std::vector<double> values;
  double sample_rate = 30.0;  // Hz
};

struct StopTimings {
  std::vector<int> frames;  // strictly increasing
  friend bool operator==(const StopTimings&, const StopTimings&) = default;
};

enum class SegmentStatus { Active, Ignored };

struct Segment {
  int start = 0;  // inclusive frame index
  int end = 0;    // exclusive
  SegmentStatus status = SegmentStatus::Active;
  std::optional<std::string> transcript;

  bool active() const { return status == SegmentStatus::Active; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Half-open range of audio samples.
struct SampleRange {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  friend bool operator==(const SampleRange&, const SampleRange&) = default;
};

/// Tunables for the stop-detection chain. Defaults match the reference setup
/// (50x50 smoothing at 30 Hz, 0.5 Hz low-pass).
struct Config {
  int window = 50;
  int hampel_half_window = 5;
  double hampel_k = 3.0;
  double cutoff_hz = 0.5;
  double min_spacing_s = 0.5;
  double rel_threshold = 0.25;
};

// ---------------------------------------------------------------------------
// Luminance and motion energy

/// BT.601 luma: round(0.299 r + 0.587 g + 0.114 b).
std::uint8_t luminance_of(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Box mean over a window x window neighbourhood truncated at the image
/// border. For even windows the neighbourhood spans [x - w/2, x + w/2 - 1].
/// Throws Error(BadRequest) if window < 1 or exceeds min(width, height).
Plane spatial_smooth(const Frame& frame, int window = 50);

/// Mean absolute difference of consecutive smoothed frames. The sample rate is
/// estimated from the first and last timestamps.
MotionSignal motion_signal(std::span<const Frame> frames, int window = 50);

/// Incremental form of motion_signal for sequences too large to hold in memory.
/// Produces bit-identical values.
class MotionSignalBuilder {
 public:
  explicit MotionSignalBuilder(int window = 50) : window_(window) {}

  void push(const Frame& frame);
  std::size_t frame_count() const { return frames_; }
  /// Throws Error(BadRequest) if fewer than two frames were pushed.
  MotionSignal finish() const;

 private:
  int window_;
  std::size_t frames_ = 0;
  int width_ = 0;
  int height_ = 0;
  double first_time_ = 0.0;
  double last_time_ = 0.0;
  std::vector<std::uint64_t> prev_sums_;
  std::vector<std::uint32_t> counts_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Signal conditioning

/// Hampel filter: samples farther than k * 1.4826 * MAD from the median of
/// their (2 * half_window + 1)-sample neighbourhood (truncated at the ends)
/// are replaced by that median.
MotionSignal remove_outliers(const MotionSignal& signal, int half_window = 5, double k = 3.0);

/// Second-order section in direct form II transposed, a0 normalized to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

/// Second-order Butterworth low-pass via the bilinear transform with
/// frequency prewarping. Throws Error(BadRequest) if cutoff >= fs / 2.
Biquad butterworth_lowpass(double cutoff_hz, double sample_rate);

/// Causal single pass with initial state `state` (two delay registers).
std::vector<double> apply_biquad(const Biquad& f, std::span<const double> x, double state[2]);

/// Zero-phase low-pass: the Butterworth section applied forward then
/// backward over an odd-reflected extension with steady-state initial
/// conditions.
MotionSignal lowpass(const MotionSignal& signal, double cutoff_hz = 0.5);

// ---------------------------------------------------------------------------
// Stop detection and slicing

/// Linear-interpolated percentile (q in [0, 100]).
double percentile(std::span<const double> values, double q);

/// Local minima below rel_threshold * P90(signal), with non-maximum
/// suppression over min_spacing_s. Endpoints never qualify. Plateaus report
/// their leftmost index.
StopTimings detect_stops(const MotionSignal& signal, double min_spacing_s = 0.5,
                         double rel_threshold = 0.25);

/// k stops produce k+1 contiguous active segments tiling [0, frame_count).
/// Stops at 0 or duplicate boundaries produce no empty segments.
std::vector<Segment> slice_segments(const StopTimings& stops, int frame_count);

/// Frame f maps to sample round(f * audio_rate / video_rate); ranges tile
/// [0, sample_count). Empty ranges are dropped.
std::vector<SampleRange> slice_audio(std::int64_t sample_count, double audio_rate,
                                     const StopTimings& stops, double video_rate);

std::int64_t frame_to_sample(int frame, double audio_rate, double video_rate);

// ---------------------------------------------------------------------------
// Full chain

struct Diagnostics {
  MotionSignal raw;
  std::vector<double> deoutliered;
  std::vector<double> filtered;
  StopTimings stops;
};

/// raw signal -> Hampel -> low-pass -> stops.
Diagnostics run_chain(const MotionSignal& raw, const Config& config = {});

/// CSV `frame_index,raw,deoutliered,filtered,is_stop`.
std::string diagnostics_csv(const Diagnostics& diag);

/// Reads a precomputed signal: one value per line, optional `value` header,
/// blank lines and '#' comments ignored.
MotionSignal parse_signal_csv(std::string_view text, double sample_rate);
std::string signal_csv(const MotionSignal& signal);

}  // namespace ites::segmentation
