// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ites/bundle.hpp"
#include "ites/taskmodel.hpp"

// Second pipeline stage: recognize each confirmed segment's task from its
// transcript, run the parameter-extraction daemons for that task, and
// assemble a validated task model.
namespace ites::compiler {

using taskmodel::TaskLabel;

inline constexpr std::string_view kToolVersion = "ites 1.0.0";

enum class Daemon { ObjectName, ObjectPosition, Laterality, GraspType, Trajectory, Hinge, Pose };

std::string_view to_string(Daemon d);

/// Static label -> daemon table, in execution order.
std::span<const Daemon> daemons_for(TaskLabel label);

struct SegmentInput {
  int index = 0;  // position in the session's segment list
  int start = 0;
  int end = 0;
  std::string transcript;
};

struct FailureItem {
  std::optional<int> segment;
  std::optional<std::size_t> step;
  std::string stage;  // "recognition", "gmr", or a daemon name
  std::string rule;
  std::string message;
};

struct CompileResult {
  std::optional<taskmodel::TaskModel> model;
  std::vector<FailureItem> failures;  // empty iff model is set
  std::vector<std::string> warnings;
};

/// Deterministic given the bundle and segments. Daemons whose input source is
/// absent from the bundle (no tracks, no grasp scores) are skipped; missing
/// data inside a provided source fails the compile.
CompileResult compile(const bundle::DemoBundle& bundle, std::span<const SegmentInput> segments);

}  // namespace ites::compiler
