// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include "ites/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "ites/error.hpp"
#include "ites/text.hpp"

namespace ites::segmentation {
namespace {

void check_window(int window, int width, int height) {
  if (window < 1) throw bad_request("smoothing window must be >= 1");
  if (window > std::min(width, height))
    throw bad_request("smoothing window " + std::to_string(window) + " larger than image " +
                      std::to_string(width) + "x" + std::to_string(height));
}

void check_frame(const Frame& f) {
  if (f.width <= 0 || f.height <= 0) throw bad_request("frame has no pixels");
  if (f.luma.size() != static_cast<std::size_t>(f.width) * f.height)
    throw bad_request("frame plane size does not match its dimensions");
}

// Window sums over the truncated neighbourhood of every pixel, computed from a
// summed-area table. Sums are exact integers.
std::vector<std::uint64_t> window_sums(const Frame& f, int window) {
  const int w = f.width, h = f.height;
  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  std::vector<std::uint64_t> sat(stride * (h + 1), 0);
  for (int y = 0; y < h; ++y) {
    std::uint64_t row = 0;
    for (int x = 0; x < w; ++x) {
      row += f.at(x, y);
      sat[(y + 1) * stride + x + 1] = sat[y * stride + x + 1] + row;
    }
  }
  const int lo = window / 2;
  const int hi = window - 1 - lo;
  std::vector<std::uint64_t> sums(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - lo), y1 = std::min(h, y + hi + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - lo), x1 = std::min(w, x + hi + 1);
      sums[static_cast<std::size_t>(y) * w + x] = sat[y1 * stride + x1] + sat[y0 * stride + x0] -
                                                  sat[y0 * stride + x1] - sat[y1 * stride + x0];
    }
  }
  return sums;
}

std::vector<std::uint32_t> window_counts(int w, int h, int window) {
  const int lo = window / 2;
  const int hi = window - 1 - lo;
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const int ny = std::min(h, y + hi + 1) - std::max(0, y - lo);
    for (int x = 0; x < w; ++x) {
      const int nx = std::min(w, x + hi + 1) - std::max(0, x - lo);
      counts[static_cast<std::size_t>(y) * w + x] = static_cast<std::uint32_t>(nx * ny);
    }
  }
  return counts;
}

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::uint8_t luminance_of(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  double y = std::round(0.299 * r + 0.587 * g + 0.114 * b);
  return static_cast<std::uint8_t>(std::clamp(y, 0.0, 255.0));
}

Plane spatial_smooth(const Frame& frame, int window) {
  check_frame(frame);
  check_window(window, frame.width, frame.height);
  auto sums = window_sums(frame, window);
  auto counts = window_counts(frame.width, frame.height, window);
  Plane out{frame.width, frame.height, std::vector<double>(sums.size())};
  for (std::size_t i = 0; i < sums.size(); ++i)
    out.values[i] = static_cast<double>(sums[i]) / counts[i];
  return out;
}

void MotionSignalBuilder::push(const Frame& frame) {
  check_frame(frame);
  if (frames_ == 0) {
    check_window(window_, frame.width, frame.height);
    width_ = frame.width;
    height_ = frame.height;
    counts_ = window_counts(width_, height_, window_);
    first_time_ = frame.timestamp;
  } else {
    if (frame.width != width_ || frame.height != height_)
      throw bad_request("frame " + std::to_string(frames_) + " dimensions " +
                            std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                            " differ from " + std::to_string(width_) + "x" + std::to_string(height_),
                        {{"frame", std::to_string(frames_)}});
    if (!(frame.timestamp > last_time_))
      throw bad_request("frame timestamps must be strictly increasing",
                        {{"frame", std::to_string(frames_)}});
  }
  auto sums = window_sums(frame, window_);
  if (frames_ > 0) {
    // Both frames share the same window count at each pixel, so the smoothed
    // difference is |S1 - S2| / count with a single rounding.
    double total = 0.0;
    for (std::size_t i = 0; i < sums.size(); ++i) {
      const std::uint64_t a = sums[i], b = prev_sums_[i];
      total += static_cast<double>(a > b ? a - b : b - a) / counts_[i];
    }
    values_.push_back(total / static_cast<double>(sums.size()));
  }
  prev_sums_ = std::move(sums);
  last_time_ = frame.timestamp;
  ++frames_;
}

MotionSignal MotionSignalBuilder::finish() const {
  if (frames_ < 2) throw bad_request("motion signal needs at least two frames");
  MotionSignal out;
  out.values = values_;
  out.sample_rate = static_cast<double>(frames_ - 1) / (last_time_ - first_time_);
  return out;
}

MotionSignal motion_signal(std::span<const Frame> frames, int window) {
  MotionSignalBuilder builder(window);
  for (const auto& f : frames) builder.push(f);
  return builder.finish();
}

MotionSignal remove_outliers(const MotionSignal& signal, int half_window, double k) {
  if (half_window < 0) throw bad_request("Hampel half-window must be >= 0");
  MotionSignal out = signal;
  const auto& x = signal.values;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> window, dev;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half_window);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half_window);
    window.assign(x.begin() + lo, x.begin() + hi + 1);
    const double med = median_of(window);
    dev.clear();
    for (std::ptrdiff_t j = lo; j <= hi; ++j) dev.push_back(std::abs(x[j] - med));
    const double mad = median_of(dev);
    if (std::abs(x[i] - med) > k * 1.4826 * mad) out.values[i] = med;
  }
  return out;
}

Biquad butterworth_lowpass(double cutoff_hz, double sample_rate) {
  if (!(sample_rate > 0.0)) throw bad_request("sample rate must be positive");
  if (!(cutoff_hz > 0.0) || cutoff_hz >= 0.5 * sample_rate)
    throw bad_request("cutoff must lie in (0, Nyquist)",
                      {{"cutoff", std::to_string(cutoff_hz)}, {"nyquist", std::to_string(0.5 * sample_rate)}});
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate);
  const double k2 = k * k;
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
  Biquad f;
  f.b0 = k2 * norm;
  f.b1 = 2.0 * f.b0;
  f.b2 = f.b0;
  f.a1 = 2.0 * (k2 - 1.0) * norm;
  f.a2 = (1.0 - std::numbers::sqrt2 * k + k2) * norm;
  return f;
}

std::vector<double> apply_biquad(const Biquad& f, std::span<const double> x, double state[2]) {
  std::vector<double> y(x.size());
  double z1 = state[0], z2 = state[1];
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double out = f.b0 * x[i] + z1;
    z1 = f.b1 * x[i] - f.a1 * out + z2;
    z2 = f.b2 * x[i] - f.a2 * out;
    y[i] = out;
  }
  state[0] = z1;
  state[1] = z2;
  return y;
}

MotionSignal lowpass(const MotionSignal& signal, double cutoff_hz) {
  const Biquad f = butterworth_lowpass(cutoff_hz, signal.sample_rate);
  const auto& x = signal.values;
  MotionSignal out{{}, signal.sample_rate};
  if (x.size() < 2) {
    out.values = x;
    return out;
  }
  const std::size_t n = x.size();
  const std::size_t pad = std::min<std::size_t>(9, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x.back() - x[n - 1 - i]);

  // Steady-state delay registers for a unit step.
  const double zi[2] = {1.0 - f.b0, f.b2 - f.a2};

  double st[2] = {zi[0] * ext.front(), zi[1] * ext.front()};
  auto fwd = apply_biquad(f, ext, st);
  std::reverse(fwd.begin(), fwd.end());
  double st2[2] = {zi[0] * fwd.front(), zi[1] * fwd.front()};
  auto back = apply_biquad(f, fwd, st2);
  std::reverse(back.begin(), back.end());

  out.values.assign(back.begin() + static_cast<std::ptrdiff_t>(pad),
                    back.begin() + static_cast<std::ptrdiff_t>(pad + n));
  return out;
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw bad_request("percentile of empty sequence");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + (v[hi] - v[lo]) * frac;
}

StopTimings detect_stops(const MotionSignal& signal, double min_spacing_s, double rel_threshold) {
  const auto& x = signal.values;
  StopTimings out;
  if (x.size() < 3) return out;
  const double threshold = rel_threshold * percentile(x, 90.0);

  struct Candidate {
    int index;
    double value;
  };
  std::vector<Candidate> candidates;
  const std::size_t n = x.size();
  for (std::size_t t = 1; t + 1 < n; ++t) {
    if (!(x[t - 1] > x[t])) continue;  // not the leftmost sample of a descent
    std::size_t r = t;
    while (r + 1 < n && x[r + 1] == x[t]) ++r;
    if (r + 1 >= n || !(x[r + 1] > x[t])) continue;
    if (x[t] < threshold) candidates.push_back({static_cast<int>(t), x[t]});
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
  const double spacing = min_spacing_s * signal.sample_rate;
  for (const auto& c : candidates) {
    bool clear = std::all_of(out.frames.begin(), out.frames.end(), [&](int kept) {
      return std::abs(kept - c.index) >= spacing;
    });
    if (clear) out.frames.push_back(c.index);
  }
  std::sort(out.frames.begin(), out.frames.end());
  return out;
}

std::vector<Segment> slice_segments(const StopTimings& stops, int frame_count) {
  std::vector<Segment> out;
  int start = 0;
  for (int s : stops.frames) {
    if (s < 0 || s >= frame_count)
      throw bad_request("stop " + std::to_string(s) + " outside [0, " + std::to_string(frame_count) + ")");
    if (s <= start) continue;
    out.push_back({start, s, SegmentStatus::Active, std::nullopt});
    start = s;
  }
  if (start < frame_count) out.push_back({start, frame_count, SegmentStatus::Active, std::nullopt});
  return out;
}

std::int64_t frame_to_sample(int frame, double audio_rate, double video_rate) {
  return static_cast<std::int64_t>(std::llround(frame * audio_rate / video_rate));
}

std::vector<SampleRange> slice_audio(std::int64_t sample_count, double audio_rate,
                                     const StopTimings& stops, double video_rate) {
  if (!(audio_rate > 0.0) || !(video_rate > 0.0)) throw bad_request("rates must be positive");
  std::vector<SampleRange> out;
  std::int64_t start = 0;
  for (int f : stops.frames) {
    const std::int64_t b = std::min(frame_to_sample(f, audio_rate, video_rate), sample_count);
    if (b <= start) continue;
    out.push_back({start, b});
    start = b;
  }
  if (start < sample_count) out.push_back({start, sample_count});
  return out;
}

Diagnostics run_chain(const MotionSignal& raw, const Config& config) {
  Diagnostics d;
  d.raw = raw;
  auto clean = remove_outliers(raw, config.hampel_half_window, config.hampel_k);
  d.deoutliered = clean.values;
  auto smooth = lowpass(clean, config.cutoff_hz);
  d.filtered = smooth.values;
  d.stops = detect_stops(smooth, config.min_spacing_s, config.rel_threshold);
  return d;
}

std::string diagnostics_csv(const Diagnostics& d) {
  std::ostringstream out;
  out << "frame_index,raw,deoutliered,filtered,is_stop\n";
  std::size_t next_stop = 0;
  char buf[160];
  for (std::size_t t = 0; t < d.raw.values.size(); ++t) {
    bool stop = next_stop < d.stops.frames.size() &&
                d.stops.frames[next_stop] == static_cast<int>(t);
    if (stop) ++next_stop;
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%d\n", t, d.raw.values[t], d.deoutliered[t],
                  d.filtered[t], stop ? 1 : 0);
    out << buf;
  }
  return out.str();
}

MotionSignal parse_signal_csv(std::string_view text_in, double sample_rate) {
  MotionSignal out{{}, sample_rate};
  auto lines = text::split_lines(text_in);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    if (out.values.empty() && i == 0 && line == "value") continue;
    auto v = text::to_double(line);
    if (!v || *v < 0.0 || !std::isfinite(*v))
      throw bad_request("signal line " + std::to_string(i + 1) + ": expected a non-negative number",
                        {{"line", std::to_string(i + 1)}});
    out.values.push_back(*v);
  }
  return out;
}

std::string signal_csv(const MotionSignal& signal) {
  std::string out = "value\n";
  char buf[64];
  for (double v : signal.values) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    out += buf;
  }
  return out;
}

}  // namespace ites::segmentation
