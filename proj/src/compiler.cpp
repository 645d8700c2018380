// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include "ites/compiler.hpp"

#include <array>

#include "ites/error.hpp"
#include "ites/recognition.hpp"
#include "ites/skillparams.hpp"

namespace ites::compiler {
namespace {

using skillparams::TrackKind;
using taskmodel::Laterality;

constexpr std::array kGraspDaemons{Daemon::ObjectName, Daemon::ObjectPosition, Daemon::Laterality,
                                   Daemon::GraspType, Daemon::Pose};
constexpr std::array kHingeDaemons{Daemon::ObjectName, Daemon::Trajectory, Daemon::Hinge, Daemon::Pose};
constexpr std::array kMotionDaemons{Daemon::ObjectName, Daemon::Trajectory, Daemon::Pose};
constexpr std::array kReleaseDaemons{Daemon::ObjectName, Daemon::Pose};

constexpr std::array<TrackKind, 6> kJoints{TrackKind::LShoulder, TrackKind::LElbow, TrackKind::LWrist,
                                           TrackKind::RShoulder, TrackKind::RElbow, TrackKind::RWrist};

// State shared across the steps of one compile: the grasp step resolves the
// manipulating hand for every later step.
struct Context {
  const bundle::DemoBundle& bundle;
  std::optional<Laterality> hand;
  std::vector<std::string> warnings;
};

void run_daemon(Daemon d, Context& ctx, const SegmentInput& seg, taskmodel::TaskStep& step) {
  const auto& b = ctx.bundle;
  auto& p = step.params;
  switch (d) {
    case Daemon::ObjectName: {
      if (b.object_vocabulary.empty()) return;
      p.object_name = recognition::extract_object_name(seg.transcript, b.object_vocabulary);
      return;
    }
    case Daemon::ObjectPosition: {
      if (!b.track) return;
      for (int f = seg.start; f < seg.end; ++f) {
        const auto* det = b.track->find(f, TrackKind::Object);
        if (det && det->confidence >= b.manifest.track_confidence && det->z > 0.0) {
          p.object_position = skillparams::backproject(det->x, det->y, det->z, b.manifest.intrinsics);
          return;
        }
      }
      throw failed_dependency("object position unavailable");
    }
    case Daemon::Laterality: {
      if (!b.track) return;
      const TrackKind obj[] = {TrackKind::Object};
      const TrackKind hands[] = {TrackKind::LeftHand, TrackKind::RightHand};
      auto first = b.track->first_frame_with(seg.start, seg.end, obj);
      auto last = b.track->last_frame_with(seg.start, seg.end, hands);
      auto side = skillparams::hand_laterality(
          first ? b.track->pixel(*first, TrackKind::Object) : std::nullopt,
          last ? b.track->pixel(*last, TrackKind::LeftHand) : std::nullopt,
          last ? b.track->pixel(*last, TrackKind::RightHand) : std::nullopt);
      p.hand_laterality = side;
      ctx.hand = side;
      return;
    }
    case Daemon::GraspType: {
      if (!b.grasp_scores) return;
      const skillparams::Distribution* scores = nullptr;
      for (auto it = b.grasp_scores->lower_bound(seg.start); it != b.grasp_scores->end() && it->first < seg.end; ++it)
        scores = &it->second;  // last frame of the grasp segment wins
      if (!scores) throw failed_dependency("grasp scores unavailable");
      skillparams::Distribution prior;
      if (b.grasp_priors && p.object_name) prior = b.grasp_priors->prior_for(*p.object_name);
      p.grasp_type = skillparams::fuse_grasp_type(*scores, prior).label;
      return;
    }
    case Daemon::Trajectory: {
      if (!b.track) return;
      if (!ctx.hand) throw failed_dependency("hand laterality unresolved");
      p.hand_trajectory = skillparams::extract_trajectory(*b.track, b.manifest.intrinsics, *ctx.hand, seg.start,
                                                          seg.end, b.manifest.video_rate, b.manifest.track_confidence);
      return;
    }
    case Daemon::Hinge: {
      if (!p.hand_trajectory) return;
      std::vector<Vec3> pts;
      for (const auto& tp : *p.hand_trajectory) pts.push_back(tp.position);
      skillparams::HingeFitOptions opts;
      opts.max_rms_residual = b.manifest.hinge_max_rms;
      auto fit = skillparams::fit_hinge(pts, opts);
      p.hinge = fit.params;
      const bool opening = fit.params.sense == taskmodel::HingeSense::Opening;
      if ((step.label == TaskLabel::PTG51) != opening)
        ctx.warnings.push_back("segment " + std::to_string(seg.index) + ": fitted hinge sense " +
                               (opening ? "opening" : "closing") + " disagrees with label " +
                               std::string(taskmodel::code(step.label)));
      return;
    }
    case Daemon::Pose: {
      if (!b.track) return;
      auto first = b.track->first_frame_with(seg.start, seg.end, kJoints);
      auto last = b.track->last_frame_with(seg.start, seg.end, kJoints);
      if (!first || !last) throw failed_dependency("pose unavailable");
      p.start_pose = b.track->arm_pose_at(*first);
      p.end_pose = b.track->arm_pose_at(*last);
      return;
    }
  }
}

}  // namespace

std::string_view to_string(Daemon d) {
  switch (d) {
    case Daemon::ObjectName: return "object_name";
    case Daemon::ObjectPosition: return "object_position";
    case Daemon::Laterality: return "laterality";
    case Daemon::GraspType: return "grasp_type";
    case Daemon::Trajectory: return "trajectory";
    case Daemon::Hinge: return "hinge";
    case Daemon::Pose: return "pose";
  }
  return "unknown";
}

std::span<const Daemon> daemons_for(TaskLabel label) {
  switch (label) {
    case TaskLabel::Grasp: return kGraspDaemons;
    case TaskLabel::Release: return kReleaseDaemons;
    case TaskLabel::PTG51:
    case TaskLabel::PTG53: return kHingeDaemons;
    default: return kMotionDaemons;
  }
}

CompileResult compile(const bundle::DemoBundle& bundle, std::span<const SegmentInput> segments) {
  CompileResult result;

  // Recognition.
  std::vector<TaskLabel> labels;
  for (const auto& seg : segments) {
    try {
      labels.push_back(bundle.classifier->predict(seg.transcript).label);
    } catch (const Error& e) {
      result.failures.push_back({seg.index, labels.size(), "recognition", "no_content", e.what()});
      labels.push_back(TaskLabel::Grasp);  // placeholder keeps positions aligned
    }
  }
  if (!result.failures.empty()) return result;

  // Grammar.
  auto report = taskmodel::validate_gmr(labels);
  if (segments.empty()) report.violations = {{0, "non_empty", "no active segments"}};
  for (const auto& v : report.violations) {
    std::optional<int> seg;
    if (v.position < segments.size()) seg = segments[v.position].index;
    result.failures.push_back({seg, v.position, "gmr", v.rule, v.message});
  }
  if (!result.failures.empty()) return result;

  // Daemons, in temporal order.
  Context ctx{bundle, std::nullopt, {}};
  taskmodel::TaskModel model;
  model.metadata = {bundle.manifest.id, bundle.manifest.created, std::string(kToolVersion)};
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    taskmodel::TaskStep step;
    step.label = labels[i];
    step.source_segment = seg.index;
    step.transcript = seg.transcript;
    for (Daemon d : daemons_for(step.label)) {
      try {
        run_daemon(d, ctx, seg, step);
      } catch (const Error& e) {
        result.failures.push_back({seg.index, i, std::string(to_string(d)), "daemon", e.what()});
        result.warnings = std::move(ctx.warnings);
        return result;
      }
    }
    model.steps.push_back(std::move(step));
  }
  result.model = std::move(model);
  result.warnings = std::move(ctx.warnings);
  return result;
}

}  // namespace ites::compiler
