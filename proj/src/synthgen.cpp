// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include "ites/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "ites/bundle.hpp"
#include "ites/error.hpp"
#include "ites/pnm.hpp"
#include "ites/text.hpp"

namespace fs = std::filesystem;

namespace ites::synthgen {
namespace {

using skillparams::Pixel;
using skillparams::TrackKind;
using taskmodel::TaskLabel;

constexpr double kMinPhase = 0.5;
constexpr std::uint8_t kBlockLuma = 230;
constexpr double kDepthConfidence = 0.95;
constexpr std::string_view kCreated = "2026-01-01T00:00:00Z";

std::uint8_t background(int x, int y) {
  return static_cast<std::uint8_t>(60 + 40 * (((x / 8) + (y / 8)) % 2) + (x * 3 + y * 5) % 17);
}

double overlap(double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); }

std::string frame_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d.pgm", i);
  return buf;
}

void write_frames(const std::vector<segmentation::Frame>& frames, const fs::path& dir) {
  fs::create_directories(dir / "frames");
  std::string list;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto name = frame_name(static_cast<int>(i));
    pnm::write_pgm(dir / "frames" / name, frames[i]);
    list += "frames/" + name + '\n';
  }
  text::write_file(dir / "frames.txt", list);
}

std::string stops_csv(const std::vector<int>& stops) {
  std::string out = "frame\n";
  for (int s : stops) out += std::to_string(s) + '\n';
  return out;
}

bundle::Manifest base_manifest(const std::string& id, double fps, const skillparams::CameraIntrinsics& k) {
  bundle::Manifest m;
  m.id = id;
  m.created = std::string(kCreated);
  m.video_rate = fps;
  m.audio_rate = 48000.0;
  m.intrinsics = k;
  m.frames = "frames.txt";
  return m;
}

// Per-frame hand path with pauses, object attachment, and utterances.
class Plan {
 public:
  Plan(Vec3 start, double fps, double px_speed, skillparams::CameraIntrinsics k)
      : cur_(start), fps_(fps), speed_(px_speed), k_(k) {}

  void attach_object(Vec3 home) { object_home_ = home; }

  void move_to(Vec3 target) {
    const auto a = skillparams::project(cur_, k_), b = skillparams::project(target, k_);
    const int n = frames_for(std::hypot(b.u - a.u, b.v - a.v));
    const Vec3 from = cur_;
    for (int i = 1; i <= n; ++i) push(from + (target - from) * (static_cast<double>(i) / n));
  }

  // Arc about `axis` through `center`, angles in plane_basis(axis).
  void arc(Vec3 center, Vec3 axis, double radius, double from, double to) {
    const auto basis = skillparams::plane_basis(axis);
    auto at = [&](double th) { return center + basis[0] * (radius * std::cos(th)) + basis[1] * (radius * std::sin(th)); };
    double length = 0.0;
    constexpr int kProbe = 64;
    for (int i = 0; i < kProbe; ++i) {
      const auto p = skillparams::project(at(from + (to - from) * i / kProbe), k_);
      const auto q = skillparams::project(at(from + (to - from) * (i + 1) / kProbe), k_);
      length += std::hypot(q.u - p.u, q.v - p.v);
    }
    const int n = frames_for(length);
    for (int i = 1; i <= n; ++i) push(at(from + (to - from) * static_cast<double>(i) / n));
  }

  void pause(double seconds, std::string utterance = {}) {
    const int e = static_cast<int>(hand_.size());
    const int n = static_cast<int>(std::lround(seconds * fps_));
    for (int i = 0; i < n; ++i) push(cur_);
    const int truth = (2 * e + n - 3) / 2;
    stops_.push_back(truth);
    if (!utterance.empty()) utterances_.push_back({truth / fps_ + 0.2, std::move(utterance)});
  }

  void grab() { held_ = true; }
  void let_go() { held_ = false; }

  const std::vector<Vec3>& hand() const { return hand_; }
  const std::vector<Vec3>& object() const { return object_; }
  const std::vector<int>& stops() const { return stops_; }
  const std::vector<bundle::Utterance>& utterances() const { return utterances_; }
  Vec3 current() const { return cur_; }

 private:
  int frames_for(double px) const { return std::max(30, static_cast<int>(std::lround(px / speed_))); }

  void push(Vec3 p) {
    if (hand_.empty()) object_pos_ = object_home_;
    cur_ = p;
    if (held_) object_pos_ = p;
    hand_.push_back(p);
    object_.push_back(object_pos_);
  }

  Vec3 cur_;
  double fps_;
  double speed_;
  skillparams::CameraIntrinsics k_;
  Vec3 object_home_;
  Vec3 object_pos_;
  bool held_ = false;
  std::vector<Vec3> hand_;
  std::vector<Vec3> object_;
  std::vector<int> stops_;
  std::vector<bundle::Utterance> utterances_;
};

struct Arm {
  Vec3 shoulder, elbow, wrist;
};

Arm right_arm(const Vec3& hand) {
  const Vec3 shoulder{0.25, -0.15, 1.35};
  return {shoulder, (shoulder + hand) * 0.5 + Vec3{0.05, 0.2, 0.0}, hand};
}

const Arm kLeftArm{{-0.25, -0.15, 1.35}, {-0.3, 0.15, 1.3}, {-0.35, 0.4, 1.1}};

struct ScenarioSpec {
  Plan plan;
  std::vector<TaskLabel> expected;
  std::vector<std::string> review;
  std::vector<std::string> objects;
  std::string grasp_priors;
};

skillparams::CameraIntrinsics scenario_intrinsics() { return {100.0, 100.0, 64.0, 64.0}; }

constexpr double kPause = 1.2;
constexpr double kSpeed = 0.9;

ScenarioSpec pick_bring_place() {
  Plan p({-0.45, -0.35, 1.0}, 30.0, kSpeed, scenario_intrinsics());
  const Vec3 box{-0.2, 0.3, 1.0};
  p.attach_object(box);
  p.move_to({-0.2, -0.05, 1.0});
  p.pause(kPause, "grass the box");
  p.move_to(box);
  p.grab();
  p.pause(kPause, "Pick the box up from the table");
  p.move_to({-0.2, -0.05, 1.0});
  p.pause(kPause, "Carry the box over to the other side");
  p.move_to({0.1, -0.05, 1.0});
  p.pause(kPause);  // hesitation mid-carry: over-split
  p.move_to({0.38, -0.05, 1.0});
  p.pause(kPause, "Put the box down there");
  p.move_to({0.38, 0.3, 1.0});
  p.let_go();
  p.pause(kPause, "Let go of the box");
  p.move_to({0.38, -0.05, 1.0});
  p.pause(kPause);
  p.move_to({0.0, -0.4, 1.0});
  return {std::move(p),
          {TaskLabel::Grasp, TaskLabel::PTG11, TaskLabel::PTG12, TaskLabel::PTG13, TaskLabel::Release},
          {"ignore 0", "ignore 7", "merge 3 4", "confirm_segments", "set_transcript 1 \"Grasp the box\"",
           "confirm_transcripts"},
          {"box", "table"},
          "object,grasp,probability\nbox,lateral,0.1\nbox,power,0.7\nbox,precision,0.2\n"};
}

ScenarioSpec throw_away() {
  Plan p({-0.45, -0.35, 1.0}, 30.0, kSpeed, scenario_intrinsics());
  const Vec3 cup{-0.2, 0.3, 1.0};
  p.attach_object(cup);
  p.move_to({-0.2, -0.05, 1.0});
  p.pause(kPause, "Grab the paper cup");
  p.move_to(cup);
  p.grab();
  p.pause(kPause, "Lift the cup up");
  p.move_to({-0.2, -0.1, 1.0});
  p.pause(kPause, "Bring it over the trash bin");
  p.move_to({0.3, -0.1, 1.0});
  p.let_go();
  p.pause(kPause, "Let go of the cup");
  p.move_to({0.3, 0.25, 1.0});
  p.pause(kPause);
  p.move_to({-0.1, -0.4, 1.0});
  return {std::move(p),
          {TaskLabel::Grasp, TaskLabel::PTG11, TaskLabel::PTG12, TaskLabel::Release},
          {"ignore 0", "ignore 5", "confirm_segments", "confirm_transcripts"},
          {"paper cup", "cup", "trash bin"},
          "object,grasp,probability\ncup,lateral,0.1\ncup,power,0.3\ncup,precision,0.6\n"
          "paper cup,lateral,0.1\npaper cup,power,0.2\npaper cup,precision,0.7\n"};
}

ScenarioSpec open_door() {
  Plan p({-0.4, -0.3, 1.0}, 30.0, kSpeed, scenario_intrinsics());
  // Vertical hinge at the right edge of the door; the handle starts 0.35 m to
  // its left and swings towards the camera.
  const Vec3 hinge{0.35, 0.0, 1.2};
  const Vec3 axis{0.0, -1.0, 0.0};
  const double radius = 0.35;
  const auto basis = skillparams::plane_basis(axis);
  const Vec3 left{-1.0, 0.0, 0.0};
  const double start = std::atan2(dot(left, basis[1]), dot(left, basis[0]));
  const Vec3 handle = hinge + left * radius;
  p.attach_object(handle);
  p.move_to(handle + Vec3{0.0, -0.3, 0.0});
  p.pause(kPause, "Grab the door handle");
  p.move_to(handle);
  p.grab();
  p.pause(kPause, "Open the fridge door");
  p.arc(hinge, axis, radius, start, start + 1.2);
  p.let_go();
  p.pause(kPause, "Release the handle");
  p.move_to(p.current() + Vec3{0.0, -0.3, 0.0});
  p.pause(kPause);
  p.move_to({-0.3, -0.35, 1.0});
  return {std::move(p),
          {TaskLabel::Grasp, TaskLabel::PTG51, TaskLabel::Release},
          {"ignore 0", "ignore 4", "confirm_segments", "confirm_transcripts"},
          {"door handle", "fridge door", "handle", "door"},
          "object,grasp,probability\ndoor handle,lateral,0.2\ndoor handle,power,0.7\ndoor handle,precision,0.1\n"};
}

ScenarioSpec shelf_multibring() {
  Plan p({-0.45, -0.4, 1.0}, 30.0, kSpeed, scenario_intrinsics());
  const Vec3 bottle{-0.3, 0.3, 1.0};
  p.attach_object(bottle);
  p.move_to({-0.3, 0.0, 1.0});
  p.pause(kPause, "Grab the bottle");
  p.move_to(bottle);
  p.grab();
  p.pause(kPause, "Pick it up");
  p.move_to({-0.3, 0.0, 1.0});
  p.pause(kPause, "Move it up above the shelf");
  p.move_to({-0.3, -0.35, 1.0});
  p.pause(kPause, "Carry it forward over the shelf");
  p.move_to({0.05, -0.35, 1.0});
  p.pause(kPause, "Bring it lower toward the shelf");
  p.move_to({0.38, -0.3, 1.0});
  p.pause(kPause, "Place it on the shelf");
  p.move_to({0.38, 0.0, 1.0});
  p.let_go();
  p.pause(kPause, "Let go of it");
  p.move_to({0.08, 0.0, 1.0});
  p.pause(kPause);
  p.move_to({-0.2, -0.35, 1.0});
  return {std::move(p),
          {TaskLabel::Grasp, TaskLabel::PTG11, TaskLabel::PTG12, TaskLabel::PTG12, TaskLabel::PTG12,
           TaskLabel::PTG13, TaskLabel::Release},
          {"ignore 0", "ignore 8", "confirm_segments", "confirm_transcripts"},
          {"bottle", "shelf"},
          "object,grasp,probability\nbottle,lateral,0.1\nbottle,power,0.8\nbottle,precision,0.1\n"};
}

}  // namespace

// ---------------------------------------------------------------------------
// Stop-go videos

Script random_script(Rng& rng, int pauses, double min_s, double max_s) {
  Script s;
  for (int i = 0; i < pauses; ++i) {
    s.push_back({Motion::Move, rng.uniform(min_s, max_s)});
    s.push_back({Motion::Pause, rng.uniform(min_s, max_s)});
  }
  s.push_back({Motion::Move, rng.uniform(min_s, max_s)});
  return s;
}

std::vector<segmentation::Frame> render_frames(const std::vector<Pixel>& centers, int size, int block, double fps,
                                               std::uint64_t seed) {
  if (size < 1 || block < 1) throw bad_request("invalid frame or block size");
  Rng rng(seed);
  std::vector<segmentation::Frame> frames;
  frames.reserve(centers.size());
  const double half = block / 2.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    segmentation::Frame f;
    f.width = f.height = size;
    f.timestamp = static_cast<double>(i) / fps;
    f.luma.resize(static_cast<std::size_t>(size) * size);
    const auto& c = centers[i];
    for (int y = 0; y < size; ++y) {
      const double oy = overlap(y, y + 1.0, c.v - half, c.v + half);
      for (int x = 0; x < size; ++x) {
        const double cov = oy * overlap(x, x + 1.0, c.u - half, c.u + half);
        const double v = background(x, y) * (1.0 - cov) + kBlockLuma * cov +
                         static_cast<double>(rng.below(3)) - 1.0;
        f.luma[static_cast<std::size_t>(y) * size + x] =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

StopGoVideo gen_stopgo(const Script& script, const StopGoOptions& o) {
  if (script.empty()) throw bad_request("degenerate script");
  for (std::size_t i = 0; i < script.size(); ++i) {
    if (!(script[i].duration >= kMinPhase) || (i > 0 && script[i].mode == script[i - 1].mode))
      throw bad_request("degenerate script", {{"phase", std::to_string(i)}});
  }
  if (!(o.fps > 0.0) || o.size < o.block + 2 || !(o.speed > 0.0)) throw bad_request("invalid stop-go options");

  Rng rng(o.seed);
  const double lo = o.block / 2.0 + 1.0, hi = o.size - o.block / 2.0 - 1.0;
  Pixel cur{o.size / 2.0, o.size / 2.0};
  StopGoVideo out;
  out.fps = o.fps;
  for (const auto& ph : script) {
    const int n = static_cast<int>(std::lround(ph.duration * o.fps));
    if (ph.mode == Motion::Pause) {
      const int e = static_cast<int>(out.centers.size());
      out.truth.push_back((2 * e + n - 3) / 2);
      for (int i = 0; i < n; ++i) out.centers.push_back(cur);
      continue;
    }
    // Straight segment at constant speed; reflect off the borders.
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    double du = std::cos(angle) * o.speed, dv = std::sin(angle) * o.speed;
    for (int i = 0; i < n; ++i) {
      double u = cur.u + du, v = cur.v + dv;
      if (u < lo || u > hi) {
        du = -du;
        u = cur.u + du;
      }
      if (v < lo || v > hi) {
        dv = -dv;
        v = cur.v + dv;
      }
      cur = {u, v};
      out.centers.push_back(cur);
    }
  }
  if (out.centers.size() < 3) throw bad_request("degenerate script");
  out.frames = render_frames(out.centers, o.size, o.block, o.fps, o.seed ^ 0x9e3779b97f4a7c15ULL);
  return out;
}

void write_stopgo(const StopGoVideo& video, const fs::path& dir, const std::string& id, bool with_signal) {
  fs::create_directories(dir);
  write_frames(video.frames, dir);
  const int size = video.frames.empty() ? 0 : video.frames.front().width;
  auto m = base_manifest(id, video.fps, {100.0, 100.0, size / 2.0, size / 2.0});
  skillparams::DetectionTrack track;
  for (std::size_t i = 0; i < video.centers.size(); ++i)
    track.add(static_cast<int>(i), TrackKind::RightHand,
              {video.centers[i].u, video.centers[i].v, 1000.0, kDepthConfidence});
  text::write_file(dir / "tracks.csv", track.to_csv());
  m.tracks = {"tracks.csv"};
  if (with_signal) {
    auto sig = segmentation::motion_signal(video.frames, m.segmentation.window);
    text::write_file(dir / "signal.csv", segmentation::signal_csv(sig));
    m.signal = "signal.csv";
  }
  text::write_file(dir / bundle::kManifestName, bundle::format_manifest(m));
  text::write_file(dir / "truth_stops.csv", stops_csv(video.truth));
}

// ---------------------------------------------------------------------------
// Arcs

Arc gen_arc(const Vec3& center, const Vec3& axis_in, double radius, double start_angle, double end_angle, int n,
            double sigma, std::uint64_t seed) {
  if (n < 3) throw bad_request("arc needs at least 3 points");
  if (!(radius > 0.0)) throw bad_request("arc radius must be positive");
  if (!(sigma >= 0.0)) throw bad_request("noise must be non-negative");
  if (!(norm(axis_in) > 1e-12)) throw bad_request("arc axis must be non-zero");
  const Vec3 axis = axis_in * (1.0 / norm(axis_in));
  const auto basis = skillparams::plane_basis(axis);
  Rng rng(seed);
  Arc arc;
  std::vector<Vec3> exact;
  for (int i = 0; i < n; ++i) {
    const double th = start_angle + (end_angle - start_angle) * i / (n - 1);
    const Vec3 p = center + basis[0] * (radius * std::cos(th)) + basis[1] * (radius * std::sin(th));
    exact.push_back(p);
    const double nx = rng.normal(), ny = rng.normal(), nz = rng.normal();
    arc.points.push_back(p + Vec3{nx, ny, nz} * sigma);
  }
  // Report in the orientation a fit would: positive sweep.
  auto& t = arc.truth;
  t.center = center;
  t.radius = radius;
  t.axis = end_angle >= start_angle ? axis : -axis;
  const auto b = skillparams::plane_basis(t.axis);
  const Vec3 d = exact.front() - center;
  t.start_angle = std::atan2(dot(d, b[1]), dot(d, b[0]));
  t.end_angle = t.start_angle + std::abs(end_angle - start_angle);
  t.sense = dot(t.axis, skillparams::HingeFitOptions{}.reference_axis) >= 0.0 ? taskmodel::HingeSense::Opening
                                                                              : taskmodel::HingeSense::Closing;
  return arc;
}

// ---------------------------------------------------------------------------
// Scenarios

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::PickBringPlace: return "pick_bring_place";
    case Scenario::ThrowAway: return "throw_away";
    case Scenario::OpenDoor: return "open_door";
    case Scenario::ShelfMultibring: return "shelf_multibring";
  }
  return "unknown";
}

const std::vector<Scenario>& all_scenarios() {
  static const std::vector<Scenario> all{Scenario::PickBringPlace, Scenario::ThrowAway, Scenario::OpenDoor,
                                         Scenario::ShelfMultibring};
  return all;
}

Scenario scenario_from(std::string_view name) {
  for (auto s : all_scenarios())
    if (to_string(s) == name) return s;
  throw bad_request("unknown scenario", {{"scenario", std::string(name)}});
}

ScenarioTruth gen_scenario(Scenario scenario, const fs::path& dir, std::uint64_t seed) {
  ScenarioSpec spec = [&] {
    switch (scenario) {
      case Scenario::PickBringPlace: return pick_bring_place();
      case Scenario::ThrowAway: return throw_away();
      case Scenario::OpenDoor: return open_door();
      case Scenario::ShelfMultibring: return shelf_multibring();
    }
    throw bad_request("unknown scenario");
  }();
  const auto k = scenario_intrinsics();
  const auto& hand = spec.plan.hand();
  const auto& object = spec.plan.object();
  const int n = static_cast<int>(hand.size());

  std::vector<Pixel> centers;
  for (const auto& h : hand) centers.push_back(skillparams::project(h, k));
  fs::create_directories(dir);
  write_frames(render_frames(centers, 128, 20, 30.0, seed), dir);

  skillparams::DetectionTrack track;
  const auto left = skillparams::project(kLeftArm.wrist, k);
  for (int f = 0; f < n; ++f) {
    const auto& h = hand[static_cast<std::size_t>(f)];
    const auto& o = object[static_cast<std::size_t>(f)];
    const auto op = skillparams::project(o, k);
    track.add(f, TrackKind::Object, {op.u, op.v, o.z * 1000.0, kDepthConfidence});
    track.add(f, TrackKind::RightHand, {centers[static_cast<std::size_t>(f)].u, centers[static_cast<std::size_t>(f)].v,
                                        h.z * 1000.0, kDepthConfidence});
    track.add(f, TrackKind::LeftHand, {left.u, left.v, kLeftArm.wrist.z * 1000.0, kDepthConfidence});
    const Arm r = right_arm(h);
    const std::array<std::pair<TrackKind, Vec3>, 6> joints{{{TrackKind::LShoulder, kLeftArm.shoulder},
                                                            {TrackKind::LElbow, kLeftArm.elbow},
                                                            {TrackKind::LWrist, kLeftArm.wrist},
                                                            {TrackKind::RShoulder, r.shoulder},
                                                            {TrackKind::RElbow, r.elbow},
                                                            {TrackKind::RWrist, r.wrist}}};
    for (const auto& [kind, p] : joints) track.add(f, kind, {p.x, p.y, p.z, kDepthConfidence});
  }
  text::write_file(dir / "tracks.csv", track.to_csv());

  std::string scores = "frame,grasp,probability\n";
  for (int f = 0; f < n; ++f) {
    scores += std::to_string(f) + ",lateral,0.2\n";
    scores += std::to_string(f) + ",power,0.5\n";
    scores += std::to_string(f) + ",precision,0.3\n";
  }
  text::write_file(dir / "grasp_scores.csv", scores);
  text::write_file(dir / "grasp_priors.csv", spec.grasp_priors);
  std::string objects;
  for (const auto& o : spec.objects) objects += o + '\n';
  text::write_file(dir / "objects.txt", objects);
  text::write_file(dir / "transcripts.tsv", bundle::format_transcript_script(spec.plan.utterances()));

  ScenarioTruth truth;
  truth.id = std::string(to_string(scenario));
  truth.expected = spec.expected;
  truth.stops = spec.plan.stops();
  truth.review = spec.review;
  truth.frame_count = n;

  auto m = base_manifest(truth.id, 30.0, k);
  m.transcripts = "transcripts.tsv";
  m.tracks = {"tracks.csv"};
  m.objects = "objects.txt";
  m.grasp_priors = "grasp_priors.csv";
  m.grasp_scores = "grasp_scores.csv";
  text::write_file(dir / bundle::kManifestName, bundle::format_manifest(m));

  text::write_file(dir / "truth_stops.csv", stops_csv(truth.stops));
  std::string labels = "step,label\n";
  for (std::size_t i = 0; i < truth.expected.size(); ++i)
    labels += std::to_string(i) + ',' + std::string(taskmodel::code(truth.expected[i])) + '\n';
  text::write_file(dir / "expected_labels.csv", labels);
  std::string review;
  for (const auto& line : truth.review) review += line + '\n';
  text::write_file(dir / "review.txt", review);
  return truth;
}

}  // namespace ites::synthgen
