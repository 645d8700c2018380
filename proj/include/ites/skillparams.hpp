// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ites/taskmodel.hpp"
#include "ites/vec3.hpp"

namespace ites::skillparams {

using taskmodel::ArmPoseCode;
using taskmodel::HingeParams;
using taskmodel::HingeSense;
using taskmodel::Laterality;
using taskmodel::TrajectoryPoint;

struct CameraIntrinsics {
  double fx = 1.0, fy = 1.0;  // pixels
  double cx = 0.0, cy = 0.0;  // pixels
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Pinhole back-projection. depth in millimetres; result in metres.
/// Throws Error(BadRequest, "invalid depth") for depth <= 0 and for
/// non-positive focal lengths.
Vec3 backproject(double u, double v, double depth_mm, const CameraIntrinsics& k);

/// Perspective projection of a camera-frame point (z > 0) to pixels.
Pixel project(const Vec3& p, const CameraIntrinsics& k);

/// Hand whose last-frame position is closer to the first-frame object centre.
/// Throws Error(FailedDependency) for a missing detection or an ambiguous tie
/// (distances equal within 1e-6 px).
Laterality hand_laterality(const std::optional<Pixel>& object, const std::optional<Pixel>& left,
                           const std::optional<Pixel>& right);

// ---------------------------------------------------------------------------
// Grasp type

using Distribution = std::map<std::string, double>;

struct GraspDecision {
  std::string label;
  Distribution posterior;
};

/// Elementwise product of classifier scores and an object prior, renormalized.
/// An empty prior means "object unknown" and acts as uniform. Throws
/// Error(BadRequest) when the vocabularies differ or a distribution does not
/// sum to 1 +/- 1e-6, and Error(FailedDependency, "inconsistent prior") when
/// every product is zero. Argmax ties resolve to the lexicographically
/// smallest grasp name.
GraspDecision fuse_grasp_type(const Distribution& classifier_scores, const Distribution& object_prior);

/// Per-object grasp priors, loaded from `object,grasp,probability` rows.
class GraspPriorTable {
 public:
  static GraspPriorTable parse_csv(std::string_view text);
  /// Empty distribution when the object has no entry.
  Distribution prior_for(std::string_view object) const;
  const std::map<std::string, Distribution, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, Distribution, std::less<>> entries_;
};

/// Grasp-classifier output per frame, from `frame,grasp,probability` rows.
using GraspScores = std::map<int, Distribution>;
GraspScores parse_grasp_scores_csv(std::string_view text);

// ---------------------------------------------------------------------------
// Hinge fitting

struct HingeFitOptions {
  double max_rms_residual = 0.05;  // metres
  /// Reference direction deciding the reported sense: the fitted axis always
  /// follows the right-hand rule of the sweep; sense is Opening when that
  /// axis has non-negative projection on `reference_axis`.
  Vec3 reference_axis{0.0, -1.0, 0.0};
};

struct HingeFit {
  HingeParams params;
  double rms_residual = 0.0;
};

/// Plane fit (smallest-eigenvalue normal of the scatter matrix), projection,
/// Kasa algebraic circle fit, then start/end angles of the first and last
/// points in a fixed in-plane basis. The axis is oriented so the unwrapped
/// sweep end - start is positive.
/// Throws Error(FailedDependency) with "insufficient points",
/// "degenerate geometry", or "poor fit".
HingeFit fit_hinge(std::span<const Vec3> points, const HingeFitOptions& options = {});

/// In-plane orthonormal basis (e1, e2) with e1 x e2 = axis. Deterministic for
/// a given axis; fit_hinge reports angles in this basis.
std::array<Vec3, 2> plane_basis(const Vec3& axis);

// ---------------------------------------------------------------------------
// Direction codebook and arm pose

/// The 26 normalized vectors of {-1,0,1}^3 \ {0}, in lexicographic order of
/// the integer triples.
const std::array<Vec3, 26>& direction_codebook();
/// Integer triple of codebook entry `index`.
std::array<int, 3> codebook_triple(int index);
int codebook_index(int x, int y, int z);

/// Codebook entry with the largest cosine to v; ties resolve to the smallest
/// index. Throws Error(FailedDependency, "undefined direction") for |v| <= 1e-9.
int quantize_direction(const Vec3& v);

struct ArmJoints {
  Vec3 shoulder, elbow, wrist;
};

/// Upper arm = elbow - shoulder, lower arm = wrist - elbow, each quantized.
ArmPoseCode encode_arm_pose(const ArmJoints& left, const ArmJoints& right);

// ---------------------------------------------------------------------------
// Detection tracks

enum class TrackKind {
  Object,
  LeftHand,
  RightHand,
  LShoulder,
  LElbow,
  LWrist,
  RShoulder,
  RElbow,
  RWrist,
};
inline constexpr std::size_t kTrackKinds = 9;

std::string_view to_string(TrackKind kind);
std::optional<TrackKind> track_kind_from(std::string_view name);
inline bool is_2d(TrackKind k) {
  return k == TrackKind::Object || k == TrackKind::LeftHand || k == TrackKind::RightHand;
}

/// One detection. For 2D kinds x,y are pixels and z is depth in millimetres
/// (0 when unavailable); for joints x,y,z are camera-frame metres.
struct Detection {
  double x = 0.0, y = 0.0, z = 0.0;
  double confidence = 1.0;
};

/// Detections indexed by global frame number.
class DetectionTrack {
 public:
  static DetectionTrack parse_csv(std::string_view text);
  std::string to_csv() const;

  void add(int frame, TrackKind kind, const Detection& d);
  /// Merges rows from another track; later rows replace earlier ones.
  void merge(const DetectionTrack& other);

  const Detection* find(int frame, TrackKind kind) const;
  std::optional<Pixel> pixel(int frame, TrackKind kind, double min_confidence = 0.0) const;

  /// First / last frame in [begin, end) carrying every listed kind.
  std::optional<int> first_frame_with(int begin, int end, std::span<const TrackKind> kinds) const;
  std::optional<int> last_frame_with(int begin, int end, std::span<const TrackKind> kinds) const;

  std::optional<ArmPoseCode> arm_pose_at(int frame) const;

  bool empty() const { return frames_.empty(); }

 private:
  using Row = std::array<std::optional<Detection>, kTrackKinds>;
  std::map<int, Row> frames_;
};

/// Back-projects the selected hand on every frame in [begin, end) whose
/// detection confidence is >= min_confidence and has positive depth. Frame
/// f is stamped f / frame_rate. Throws Error(FailedDependency,
/// "trajectory unavailable") when no frame qualifies.
std::vector<TrajectoryPoint> extract_trajectory(const DetectionTrack& track, const CameraIntrinsics& k,
                                                Laterality hand, int begin, int end, double frame_rate,
                                                double min_confidence = 0.5);

}  // namespace ites::skillparams
