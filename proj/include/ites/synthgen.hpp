// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ites/random.hpp"
#include "ites/segmentation.hpp"
#include "ites/skillparams.hpp"
#include "ites/taskmodel.hpp"

// Seeded generators for synthetic demonstrations with known ground truth.
namespace ites::synthgen {

enum class Motion { Move, Pause };

struct ScriptPhase {
  Motion mode = Motion::Move;
  double duration = 1.0;  // seconds
};
using Script = std::vector<ScriptPhase>;

/// Alternating move/pause phases beginning and ending with a move, with
/// `pauses` pauses and every duration drawn uniformly from [min_s, max_s].
Script random_script(Rng& rng, int pauses, double min_s, double max_s);

struct StopGoOptions {
  double fps = 30.0;
  int size = 128;        // square frames
  int block = 20;        // block side, pixels
  double speed = 1.0;    // pixels per frame while moving
  std::uint64_t seed = 0;
};

struct StopGoVideo {
  std::vector<segmentation::Frame> frames;
  std::vector<skillparams::Pixel> centers;  // block centre per frame
  std::vector<int> truth;                   // pause centres, in signal indices
  double fps = 30.0;
};

/// Renders a bright block translating at constant speed over a textured
/// background, stationary during pauses. Pause truth is the middle of the run
/// of zero-motion signal samples (leftmost middle for even runs). Throws
/// Error(BadRequest, "degenerate script") unless the script alternates modes
/// and every phase lasts at least 0.5 s.
StopGoVideo gen_stopgo(const Script& script, const StopGoOptions& options = {});

/// Frames for an arbitrary per-frame block path. Noise is +/-1 grey level.
std::vector<segmentation::Frame> render_frames(const std::vector<skillparams::Pixel>& centers, int size, int block,
                                               double fps, std::uint64_t seed);

/// Writes a bundle directory for a stop-go video: frames, manifest, a
/// right-hand track, and `truth_stops.csv`. With `with_signal` the raw motion
/// signal is also written and referenced from the manifest.
void write_stopgo(const StopGoVideo& video, const std::filesystem::path& dir, const std::string& id,
                  bool with_signal = false);

struct Arc {
  std::vector<Vec3> points;
  taskmodel::HingeParams truth;  // axis oriented so the sweep is positive
};

/// n points evenly spaced in angle on a circle about `axis` through `center`,
/// angles measured in plane_basis(axis), plus isotropic Gaussian noise.
/// Throws Error(BadRequest) for n < 3, radius <= 0, or a zero axis.
Arc gen_arc(const Vec3& center, const Vec3& axis, double radius, double start_angle, double end_angle, int n,
            double sigma, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Scenarios

enum class Scenario { PickBringPlace, ThrowAway, OpenDoor, ShelfMultibring };

std::string_view to_string(Scenario s);
/// Throws Error(BadRequest, "unknown scenario").
Scenario scenario_from(std::string_view name);
const std::vector<Scenario>& all_scenarios();

struct ScenarioTruth {
  std::string id;
  std::vector<taskmodel::TaskLabel> expected;
  std::vector<int> stops;
  /// Review edits from a fresh session up to confirmed transcripts, in
  /// audit-argument encoding, e.g. `merge 3 4`.
  std::vector<std::string> review;
  int frame_count = 0;
};

/// Writes a complete bundle (frames, manifest, transcript script, detection
/// tracks, grasp scores and priors, object vocabulary) plus truth files
/// `truth_stops.csv`, `expected_labels.csv`, and `review.txt` into `dir`.
/// Same seed, same bytes.
ScenarioTruth gen_scenario(Scenario scenario, const std::filesystem::path& dir, std::uint64_t seed = 0);

}  // namespace ites::synthgen
