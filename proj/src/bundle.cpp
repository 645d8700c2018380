// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include "ites/bundle.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "ites/error.hpp"
#include "ites/pnm.hpp"
#include "ites/text.hpp"

namespace ites::bundle {
namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& msg) {
  throw bad_request("manifest field '" + field + "': " + msg, {{"field", field}});
}

double positive_real(const std::string& field, std::string_view v) {
  auto d = text::to_double(v);
  if (!d || !std::isfinite(*d) || !(*d > 0.0)) bad_field(field, "expected a positive number");
  return *d;
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint32_t le32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
}
void put16(std::string& s, std::uint16_t v) {
  s += static_cast<char>(v & 0xff);
  s += static_cast<char>(v >> 8);
}

fs::path resolve(const fs::path& dir, const std::string& field, const std::string& rel) {
  fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : dir / rel;
  if (!fs::is_regular_file(p)) bad_field(field, "file not found: " + rel);
  return p;
}

template <typename F>
auto load_field(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.detail().count("field")) throw;
    bad_field(field, e.what());
  }
}

}  // namespace

Manifest parse_manifest(std::string_view text_in) {
  Manifest m;
  bool have_format = false, have_frames = false;
  std::map<std::string, bool> seen;
  auto lines = text::split_lines(text_in);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw bad_request("manifest line " + std::to_string(i + 1) + ": expected 'key = value'",
                        {{"line", std::to_string(i + 1)}});
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string val(text::trim(line.substr(eq + 1)));
    if (seen[key]) bad_field(key, "given more than once");
    seen[key] = true;

    if (key == "format") {
      if (val != kManifestFormat) bad_field(key, "unsupported format '" + val + "'");
      have_format = true;
    } else if (key == "id") {
      m.id = val;
    } else if (key == "created") {
      m.created = val;
    } else if (key == "video_rate") {
      m.video_rate = positive_real(key, val);
    } else if (key == "audio_rate") {
      m.audio_rate = positive_real(key, val);
    } else if (key == "audio_samples") {
      auto n = text::to_long(val);
      if (!n || *n < 0) bad_field(key, "expected a non-negative integer");
      m.audio_samples = *n;
    } else if (key == "fx") {
      m.intrinsics.fx = positive_real(key, val);
    } else if (key == "fy") {
      m.intrinsics.fy = positive_real(key, val);
    } else if (key == "cx" || key == "cy") {
      auto d = text::to_double(val);
      if (!d) bad_field(key, "expected a number");
      (key == "cx" ? m.intrinsics.cx : m.intrinsics.cy) = *d;
    } else if (key == "frames") {
      m.frames = val;
      have_frames = !val.empty();
    } else if (key == "audio") {
      m.audio = val;
    } else if (key == "signal") {
      m.signal = val;
    } else if (key == "transcripts") {
      m.transcripts = val;
    } else if (key == "tracks") {
      for (auto t : text::split_ws(val)) m.tracks.emplace_back(t);
    } else if (key == "objects") {
      m.objects = val;
    } else if (key == "grasp_priors") {
      m.grasp_priors = val;
    } else if (key == "grasp_scores") {
      m.grasp_scores = val;
    } else if (key == "model") {
      m.model = val;
    } else if (key == "track_confidence") {
      auto d = text::to_double(val);
      if (!d || *d < 0.0 || *d > 1.0) bad_field(key, "expected a value in [0,1]");
      m.track_confidence = *d;
    } else if (key == "hinge_max_rms") {
      m.hinge_max_rms = positive_real(key, val);
    } else if (key == "segmentation.window") {
      auto n = text::to_long(val);
      if (!n || *n < 1) bad_field(key, "expected a positive integer");
      m.segmentation.window = static_cast<int>(*n);
    } else if (key == "segmentation.hampel_half_window") {
      auto n = text::to_long(val);
      if (!n || *n < 0) bad_field(key, "expected a non-negative integer");
      m.segmentation.hampel_half_window = static_cast<int>(*n);
    } else if (key == "segmentation.hampel_k") {
      m.segmentation.hampel_k = positive_real(key, val);
    } else if (key == "segmentation.cutoff_hz") {
      m.segmentation.cutoff_hz = positive_real(key, val);
    } else if (key == "segmentation.min_spacing_s") {
      m.segmentation.min_spacing_s = positive_real(key, val);
    } else if (key == "segmentation.rel_threshold") {
      m.segmentation.rel_threshold = positive_real(key, val);
    } else {
      bad_field(key, "unknown field");
    }
  }
  if (!have_format) bad_field("format", "missing (expected '" + std::string(kManifestFormat) + "')");
  if (m.id.empty()) bad_field("id", "missing");
  if (!have_frames) bad_field("frames", "missing");
  return m;
}

std::string format_manifest(const Manifest& m) {
  std::ostringstream out;
  out << "format = " << kManifestFormat << '\n';
  out << "id = " << m.id << '\n';
  if (!m.created.empty()) out << "created = " << m.created << '\n';
  out << "video_rate = " << fmt_real(m.video_rate) << '\n';
  out << "audio_rate = " << fmt_real(m.audio_rate) << '\n';
  if (m.audio_samples) out << "audio_samples = " << *m.audio_samples << '\n';
  out << "fx = " << fmt_real(m.intrinsics.fx) << '\n';
  out << "fy = " << fmt_real(m.intrinsics.fy) << '\n';
  out << "cx = " << fmt_real(m.intrinsics.cx) << '\n';
  out << "cy = " << fmt_real(m.intrinsics.cy) << '\n';
  out << "frames = " << m.frames << '\n';
  if (m.audio) out << "audio = " << *m.audio << '\n';
  if (m.signal) out << "signal = " << *m.signal << '\n';
  if (m.transcripts) out << "transcripts = " << *m.transcripts << '\n';
  if (!m.tracks.empty()) {
    out << "tracks =";
    for (const auto& t : m.tracks) out << ' ' << t;
    out << '\n';
  }
  if (m.objects) out << "objects = " << *m.objects << '\n';
  if (m.grasp_priors) out << "grasp_priors = " << *m.grasp_priors << '\n';
  if (m.grasp_scores) out << "grasp_scores = " << *m.grasp_scores << '\n';
  if (m.model) out << "model = " << *m.model << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------

PcmAudio decode_wav(std::string_view bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw bad_request("not a RIFF/WAVE file");
  PcmAudio out;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = le32(p + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw bad_request("WAV chunk truncated");
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (size < 16) throw bad_request("WAV fmt chunk too short");
      if (le16(p + body) != 1) throw bad_request("WAV must be PCM");
      if (le16(p + body + 2) != 1) throw bad_request("WAV must be mono");
      if (le16(p + body + 14) != 16) throw bad_request("WAV must be 16-bit");
      out.sample_rate = le32(p + body + 4);
      if (out.sample_rate <= 0) throw bad_request("WAV sample rate must be positive");
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      if (!have_fmt) throw bad_request("WAV data chunk before fmt chunk");
      out.samples.resize(size / 2);
      for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] = static_cast<std::int16_t>(le16(p + body + 2 * i));
      return out;
    }
    pos = body + size + (size & 1);
  }
  throw bad_request("WAV has no data chunk");
}

std::string encode_wav(const PcmAudio& audio) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
  std::string s = "RIFF";
  put32(s, 36 + data_bytes);
  s += "WAVEfmt ";
  put32(s, 16);
  put16(s, 1);         // PCM
  put16(s, 1);         // mono
  put32(s, rate);
  put32(s, rate * 2);  // byte rate
  put16(s, 2);         // block align
  put16(s, 16);
  s += "data";
  put32(s, data_bytes);
  for (auto v : audio.samples) put16(s, static_cast<std::uint16_t>(v));
  return s;
}

// ---------------------------------------------------------------------------

std::vector<Utterance> parse_transcript_script(std::string_view text_in) {
  std::vector<Utterance> out;
  auto lines = text::split_lines(text_in);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = lines[i];
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw bad_request("transcript line " + std::to_string(i + 1) + ": expected time<TAB>text");
    auto head = text::trim(line.substr(0, tab));
    if (i == 0 && head == "time") continue;
    auto t = text::to_double(head);
    if (!t || *t < 0.0) throw bad_request("transcript line " + std::to_string(i + 1) + ": invalid time");
    out.push_back({*t, std::string(text::trim(line.substr(tab + 1)))});
  }
  return out;
}

std::string format_transcript_script(const std::vector<Utterance>& utterances) {
  std::string out = "time\ttext\n";
  char buf[64];
  for (const auto& u : utterances) {
    std::snprintf(buf, sizeof buf, "%.6f\t", u.time);
    out += buf;
    out += u.text;
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const DemoBundle> load(const fs::path& dir_in) {
  if (!fs::is_directory(dir_in)) throw not_found("bundle not found", {{"path", dir_in.string()}});
  auto b = std::make_shared<DemoBundle>();
  b->dir = fs::absolute(dir_in).lexically_normal();
  const fs::path manifest_path = b->dir / kManifestName;
  if (!fs::is_regular_file(manifest_path))
    throw bad_request("bundle has no " + std::string(kManifestName), {{"field", "manifest"}});
  b->manifest_text = text::read_file(manifest_path);
  b->manifest = parse_manifest(b->manifest_text);
  const auto& m = b->manifest;

  const fs::path list = resolve(b->dir, "frames", m.frames);
  const fs::path list_dir = list.parent_path();
  const std::string list_text = text::read_file(list);
  for (auto line : text::split_lines(list_text)) {
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    b->frame_paths.push_back(resolve(list_dir, "frames", std::string(line)));
  }
  if (b->frame_paths.empty()) bad_field("frames", "empty frame list");

  if (m.audio) {
    b->audio = load_field("audio", [&] { return decode_wav(text::read_file(resolve(b->dir, "audio", *m.audio))); });
    if (std::abs(b->audio->sample_rate - m.audio_rate) > 1e-9) bad_field("audio", "WAV rate differs from audio_rate");
    b->audio_sample_count = static_cast<std::int64_t>(b->audio->samples.size());
  } else if (m.audio_samples) {
    b->audio_sample_count = *m.audio_samples;
  } else {
    b->audio_sample_count = segmentation::frame_to_sample(b->frame_count(), m.audio_rate, m.video_rate);
  }

  if (m.signal) {
    b->signal = load_field("signal", [&] {
      return segmentation::parse_signal_csv(text::read_file(resolve(b->dir, "signal", *m.signal)), m.video_rate);
    });
    if (b->signal->values.size() + 1 != b->frame_paths.size())
      bad_field("signal", "expected " + std::to_string(b->frame_paths.size() - 1) + " values, got " +
                              std::to_string(b->signal->values.size()));
  }
  if (m.transcripts) {
    b->utterances = load_field("transcripts", [&] {
      return parse_transcript_script(text::read_file(resolve(b->dir, "transcripts", *m.transcripts)));
    });
  }
  for (const auto& t : m.tracks) {
    auto track = load_field("tracks", [&] {
      return skillparams::DetectionTrack::parse_csv(text::read_file(resolve(b->dir, "tracks", t)));
    });
    if (!b->track) b->track = std::move(track);
    else b->track->merge(track);
  }
  if (m.objects) {
    const std::string objects_text = text::read_file(resolve(b->dir, "objects", *m.objects));
    for (auto line : text::split_lines(objects_text)) {
      line = text::trim(line);
      if (line.empty() || line.front() == '#') continue;
      std::string entry;
      for (char c : line) entry += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      b->object_vocabulary.push_back(std::move(entry));
    }
  }
  if (m.grasp_priors) {
    b->grasp_priors = load_field("grasp_priors", [&] {
      return skillparams::GraspPriorTable::parse_csv(text::read_file(resolve(b->dir, "grasp_priors", *m.grasp_priors)));
    });
  }
  if (m.grasp_scores) {
    b->grasp_scores = load_field("grasp_scores", [&] {
      return skillparams::parse_grasp_scores_csv(text::read_file(resolve(b->dir, "grasp_scores", *m.grasp_scores)));
    });
  }
  if (m.model) {
    b->classifier = load_field("model", [&] {
      return std::make_shared<const recognition::NaiveBayesClassifier>(
          recognition::NaiveBayesClassifier::load(text::read_file(resolve(b->dir, "model", *m.model))));
    });
  } else {
    b->classifier = std::shared_ptr<const recognition::TaskClassifier>(&recognition::seed_classifier(),
                                                                       [](const recognition::TaskClassifier*) {});
  }
  return b;
}

segmentation::MotionSignal raw_signal(const DemoBundle& b) {
  if (b.signal) return *b.signal;
  segmentation::MotionSignalBuilder builder(b.manifest.segmentation.window);
  for (std::size_t i = 0; i < b.frame_paths.size(); ++i) {
    auto frame = load_field("frames", [&] { return pnm::read(b.frame_paths[i]); });
    frame.timestamp = static_cast<double>(i) / b.manifest.video_rate;
    builder.push(frame);
  }
  auto signal = builder.finish();
  signal.sample_rate = b.manifest.video_rate;
  return signal;
}

}  // namespace ites::bundle
