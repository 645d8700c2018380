// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ites/vec3.hpp"

namespace ites::taskmodel {

/// Primitive tasks of a grasp-manipulation-release operation.
/// The declaration order is the canonical class order used for tie-breaking.
enum class TaskLabel {
  Grasp,
  PTG11,  // picking
  PTG12,  // bringing
  PTG13,  // placing
  PTG31,  // sliding open
  PTG33,  // sliding close
  PTG51,  // rotating hinge to open
  PTG53,  // rotating hinge to close
  STG2,   // wiping
  STG3,   // peeling
  STG5,   // pouring
  STG6,   // holding
  MTG1,   // cutting
  Release,
};

inline constexpr std::size_t kLabelCount = 14;

/// All labels in canonical order.
const std::array<TaskLabel, kLabelCount>& all_labels();

std::string_view code(TaskLabel label);
std::string_view display_name(TaskLabel label);
std::optional<TaskLabel> label_from_code(std::string_view code);
std::size_t index_of(TaskLabel label);

inline bool is_boundary(TaskLabel label) {
  return label == TaskLabel::Grasp || label == TaskLabel::Release;
}
inline bool is_manipulative(TaskLabel label) { return !is_boundary(label); }

enum class Laterality { Left, Right };
std::string_view to_string(Laterality side);

/// Four indices into the 26-direction codebook:
/// left upper arm, left lower arm, right upper arm, right lower arm.
struct ArmPoseCode {
  std::array<int, 4> directions{};
  friend bool operator==(const ArmPoseCode&, const ArmPoseCode&) = default;
};

enum class HingeSense { Opening, Closing };

struct HingeParams {
  Vec3 center;
  Vec3 axis;  // unit length
  double radius = 0.0;
  double start_angle = 0.0;
  double end_angle = 0.0;
  HingeSense sense = HingeSense::Opening;
  friend bool operator==(const HingeParams&, const HingeParams&) = default;
};

struct TrajectoryPoint {
  double time = 0.0;  // seconds
  Vec3 position;
  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct SkillParameters {
  std::optional<std::string> object_name;
  std::optional<Vec3> object_position;
  std::optional<Laterality> hand_laterality;
  std::optional<std::string> grasp_type;
  std::optional<std::vector<TrajectoryPoint>> hand_trajectory;
  std::optional<HingeParams> hinge;
  std::optional<ArmPoseCode> start_pose;
  std::optional<ArmPoseCode> end_pose;
  friend bool operator==(const SkillParameters&, const SkillParameters&) = default;
};

struct TaskStep {
  TaskLabel label = TaskLabel::Grasp;
  SkillParameters params;
  int source_segment = 0;
  std::string transcript;
  friend bool operator==(const TaskStep&, const TaskStep&) = default;
};

struct Metadata {
  std::string bundle_id;
  std::string created;
  std::string tool_version;
  friend bool operator==(const Metadata&, const Metadata&) = default;
};

struct TaskModel {
  std::vector<TaskStep> steps;
  Metadata metadata;
  friend bool operator==(const TaskModel&, const TaskModel&) = default;

  std::vector<TaskLabel> labels() const;
};

// ---------------------------------------------------------------------------
// GMR grammar

struct Violation {
  std::size_t position = 0;  // index into the label sequence
  std::string rule;          // stable rule identifier
  std::string message;       // human-readable, e.g. "must end with Release"
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct GmrReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks a label sequence against the grasp-manipulation-release grammar:
///   Grasp (manipulative)+ Release
/// Invalid input yields violations, never an exception. An empty sequence
/// is reported as a violation at position 0.
GmrReport validate_gmr(std::span<const TaskLabel> labels);

// ---------------------------------------------------------------------------
// Serialization

inline constexpr std::string_view kFileHeader = "taskmodel v1";

/// Writes the line-oriented task-model document. Reals are written with six
/// fractional digits. Throws Error(Conflict) if the model violates the GMR
/// grammar.
std::string serialize(const TaskModel& model);

/// Parses a task-model document. Throws Error(BadRequest) with a "line N:"
/// prefix on malformed input or unknown labels, and Error(Conflict) on
/// GMR-invalid step sequences.
TaskModel parse(std::string_view text);

/// Quotes text for a single-line field (backslash escapes for \ " \n \r \t).
std::string quote(std::string_view text);
/// Inverse of quote(); throws Error(BadRequest) on malformed escapes.
std::string unquote(std::string_view quoted);

}  // namespace ites::taskmodel
