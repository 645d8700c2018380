// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include "ites/taskmodel.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "ites/error.hpp"
#include "ites/text.hpp"

namespace ites::taskmodel {
namespace {

struct LabelInfo {
  TaskLabel label;
  std::string_view code;
  std::string_view name;
};

constexpr std::array<LabelInfo, kLabelCount> kLabels{{
    {TaskLabel::Grasp, "Grasp", "Grasping"},
    {TaskLabel::PTG11, "PTG11", "Picking"},
    {TaskLabel::PTG12, "PTG12", "Bringing"},
    {TaskLabel::PTG13, "PTG13", "Placing"},
    {TaskLabel::PTG31, "PTG31", "Sliding_to_open"},
    {TaskLabel::PTG33, "PTG33", "Sliding_to_close"},
    {TaskLabel::PTG51, "PTG51", "Rotating_hinge_to_open"},
    {TaskLabel::PTG53, "PTG53", "Rotating_hinge_to_close"},
    {TaskLabel::STG2, "STG2", "Wiping"},
    {TaskLabel::STG3, "STG3", "Peeling"},
    {TaskLabel::STG5, "STG5", "Pouring"},
    {TaskLabel::STG6, "STG6", "Holding"},
    {TaskLabel::MTG1, "MTG1", "Cutting"},
    {TaskLabel::Release, "Release", "Releasing"},
}};

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  if (std::string_view(buf) == "-0.000000") return "0.000000";
  return buf;
}

std::string point_text(const Vec3& p) {
  return fixed6(p.x) + "," + fixed6(p.y) + "," + fixed6(p.z);
}

std::string pose_text(const ArmPoseCode& pose) {
  std::string out;
  for (std::size_t i = 0; i < pose.directions.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(pose.directions[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing helpers. `line_no` is 1-based and is only used for diagnostics.

[[noreturn]] void fail(std::size_t line_no, const std::string& msg) {
  throw bad_request("line " + std::to_string(line_no) + ": " + msg,
                    {{"line", std::to_string(line_no)}});
}

double parse_real(std::string_view s, std::size_t line_no) {
  auto v = text::to_double(s);
  if (!v) fail(line_no, "invalid number '" + std::string(s) + "'");
  return *v;
}

long parse_int(std::string_view s, std::size_t line_no) {
  auto v = text::to_long(s);
  if (!v) fail(line_no, "invalid integer '" + std::string(s) + "'");
  return *v;
}

Vec3 parse_point(std::string_view s, std::size_t line_no) {
  auto parts = text::split(s, ',');
  if (parts.size() != 3) fail(line_no, "expected x,y,z but got '" + std::string(s) + "'");
  return {parse_real(parts[0], line_no), parse_real(parts[1], line_no),
          parse_real(parts[2], line_no)};
}

ArmPoseCode parse_pose(std::string_view s, std::size_t line_no) {
  auto parts = text::split(s, ',');
  if (parts.size() != 4) fail(line_no, "expected four direction indices");
  ArmPoseCode pose;
  for (std::size_t i = 0; i < 4; ++i) {
    long d = parse_int(parts[i], line_no);
    if (d < 0 || d >= 26) fail(line_no, "direction index out of range: " + std::to_string(d));
    pose.directions[i] = static_cast<int>(d);
  }
  return pose;
}

std::string parse_quoted(std::string_view s, std::size_t line_no) {
  try {
    return unquote(s);
  } catch (const Error& e) {
    fail(line_no, e.what());
  }
}

HingeParams parse_hinge(std::string_view s, std::size_t line_no) {
  HingeParams h;
  unsigned seen = 0;
  for (auto field : text::split_ws(s)) {
    auto eq = field.find('=');
    if (eq == std::string_view::npos) fail(line_no, "malformed hinge field '" + std::string(field) + "'");
    auto key = field.substr(0, eq);
    auto val = field.substr(eq + 1);
    if (key == "center") {
      h.center = parse_point(val, line_no);
      seen |= 1;
    } else if (key == "axis") {
      h.axis = parse_point(val, line_no);
      seen |= 2;
    } else if (key == "radius") {
      h.radius = parse_real(val, line_no);
      seen |= 4;
    } else if (key == "start") {
      h.start_angle = parse_real(val, line_no);
      seen |= 8;
    } else if (key == "end") {
      h.end_angle = parse_real(val, line_no);
      seen |= 16;
    } else if (key == "sense") {
      if (val == "opening") h.sense = HingeSense::Opening;
      else if (val == "closing") h.sense = HingeSense::Closing;
      else fail(line_no, "unknown hinge sense '" + std::string(val) + "'");
      seen |= 32;
    } else {
      fail(line_no, "unknown hinge field '" + std::string(key) + "'");
    }
  }
  if (seen != 63) fail(line_no, "incomplete hinge description");
  return h;
}

class LineReader {
 public:
  explicit LineReader(std::string_view text) : lines_(text::split_lines(text)) {}

  bool done() const { return pos_ >= lines_.size(); }
  std::size_t line_no() const { return pos_; }  // number of the last line taken
  std::string_view peek() const { return lines_[pos_]; }
  std::string_view next() {
    if (done()) fail(pos_ + 1, "unexpected end of document");
    return lines_[pos_++];
  }

 private:
  std::vector<std::string_view> lines_;
  std::size_t pos_ = 0;
};

// Splits "key = value" after a fixed indentation prefix.
std::pair<std::string_view, std::string_view> key_value(std::string_view line, std::size_t line_no) {
  auto eq = line.find(" = ");
  if (eq == std::string_view::npos) fail(line_no, "expected '<name> = <value>'");
  return {line.substr(0, eq), line.substr(eq + 3)};
}

std::string_view expect_tagged(std::string_view line, std::string_view tag, std::size_t line_no) {
  if (!text::starts_with(line, tag) || line.size() <= tag.size() || line[tag.size()] != ' ')
    fail(line_no, "expected '" + std::string(tag) + " <value>'");
  return line.substr(tag.size() + 1);
}

}  // namespace

const std::array<TaskLabel, kLabelCount>& all_labels() {
  static const std::array<TaskLabel, kLabelCount> labels = [] {
    std::array<TaskLabel, kLabelCount> out{};
    for (std::size_t i = 0; i < kLabelCount; ++i) out[i] = kLabels[i].label;
    return out;
  }();
  return labels;
}

std::size_t index_of(TaskLabel label) { return static_cast<std::size_t>(label); }

std::string_view code(TaskLabel label) { return kLabels[index_of(label)].code; }

std::string_view display_name(TaskLabel label) { return kLabels[index_of(label)].name; }

std::optional<TaskLabel> label_from_code(std::string_view c) {
  for (const auto& info : kLabels)
    if (info.code == c) return info.label;
  return std::nullopt;
}

std::string_view to_string(Laterality side) { return side == Laterality::Left ? "Left" : "Right"; }

std::vector<TaskLabel> TaskModel::labels() const {
  std::vector<TaskLabel> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.label);
  return out;
}

GmrReport validate_gmr(std::span<const TaskLabel> labels) {
  GmrReport report;
  auto add = [&](std::size_t pos, std::string rule, std::string msg) {
    report.violations.push_back({pos, std::move(rule), std::move(msg)});
  };
  if (labels.empty()) {
    add(0, "non_empty", "sequence is empty");
    return report;
  }
  const std::size_t last = labels.size() - 1;
  if (labels.front() != TaskLabel::Grasp) add(0, "starts_with_grasp", "must start with Grasp");
  bool has_manipulative = false;
  for (std::size_t i = 1; i < last; ++i) {
    if (is_boundary(labels[i]))
      add(i, "no_interior_boundary",
          std::string(code(labels[i])) + " not allowed in interior position");
    else
      has_manipulative = true;
  }
  if (labels.back() != TaskLabel::Release) add(last, "ends_with_release", "must end with Release");
  if (!has_manipulative) add(last, "manipulative_interior", "no manipulative interior task");
  return report;
}

// ---------------------------------------------------------------------------

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string unquote(std::string_view s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"')
    throw bad_request("expected quoted string");
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    char c = s[i];
    if (c == '"') throw bad_request("unescaped quote inside string");
    if (c != '\\') {
      out += c;
      continue;
    }
    if (i + 2 >= s.size()) throw bad_request("dangling escape");
    switch (s[++i]) {
      case '\\': out += '\\'; break;
      case '"': out += '"'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case 't': out += '\t'; break;
      default: throw bad_request(std::string("unknown escape \\") + s[i]);
    }
  }
  return out;
}

std::string serialize(const TaskModel& model) {
  const auto labels = model.labels();
  auto report = validate_gmr(labels);
  if (!report.ok())
    throw conflict("task model violates GMR grammar: " + report.violations.front().message);

  std::ostringstream out;
  out << kFileHeader << '\n';
  out << "bundle " << quote(model.metadata.bundle_id) << '\n';
  out << "created " << quote(model.metadata.created) << '\n';
  out << "tool " << quote(model.metadata.tool_version) << '\n';
  out << "steps " << model.steps.size() << '\n';
  for (std::size_t i = 0; i < model.steps.size(); ++i) {
    const auto& step = model.steps[i];
    const auto& p = step.params;
    out << "step " << i << ": label=" << code(step.label) << '\n';
    out << "  segment = " << step.source_segment << '\n';
    out << "  transcript = " << quote(step.transcript) << '\n';
    if (p.object_name) out << "  param object_name = " << quote(*p.object_name) << '\n';
    if (p.object_position) out << "  param object_position = " << point_text(*p.object_position) << '\n';
    if (p.hand_laterality) out << "  param hand_laterality = " << to_string(*p.hand_laterality) << '\n';
    if (p.grasp_type) out << "  param grasp_type = " << quote(*p.grasp_type) << '\n';
    if (p.hand_trajectory) {
      out << "  param hand_trajectory = " << p.hand_trajectory->size() << '\n';
      for (const auto& tp : *p.hand_trajectory)
        out << "    " << fixed6(tp.time) << ' ' << point_text(tp.position) << '\n';
    }
    if (p.hinge) {
      const auto& h = *p.hinge;
      out << "  param hinge = center=" << point_text(h.center) << " axis=" << point_text(h.axis)
          << " radius=" << fixed6(h.radius) << " start=" << fixed6(h.start_angle)
          << " end=" << fixed6(h.end_angle)
          << " sense=" << (h.sense == HingeSense::Opening ? "opening" : "closing") << '\n';
    }
    if (p.start_pose) out << "  param start_pose = " << pose_text(*p.start_pose) << '\n';
    if (p.end_pose) out << "  param end_pose = " << pose_text(*p.end_pose) << '\n';
  }
  out << "end\n";
  return out.str();
}

TaskModel parse(std::string_view document) {
  LineReader in(document);
  TaskModel model;

  if (in.done() || in.next() != kFileHeader) fail(1, "missing header '" + std::string(kFileHeader) + "'");
  model.metadata.bundle_id = parse_quoted(expect_tagged(in.next(), "bundle", in.line_no()), in.line_no());
  model.metadata.created = parse_quoted(expect_tagged(in.next(), "created", in.line_no()), in.line_no());
  model.metadata.tool_version = parse_quoted(expect_tagged(in.next(), "tool", in.line_no()), in.line_no());
  long count = parse_int(expect_tagged(in.next(), "steps", in.line_no()), in.line_no());
  if (count < 0) fail(in.line_no(), "negative step count");

  // Field order inside a step block is fixed; `rank` enforces it.
  static constexpr std::array<std::string_view, 10> kOrder{
      "segment",    "transcript",      "object_name", "object_position", "hand_laterality",
      "grasp_type", "hand_trajectory", "hinge",       "start_pose",      "end_pose"};
  auto rank_of = [](std::string_view name) -> int {
    for (std::size_t i = 0; i < kOrder.size(); ++i)
      if (kOrder[i] == name) return static_cast<int>(i);
    return -1;
  };

  for (long i = 0; i < count; ++i) {
    auto header = in.next();
    const auto header_line = in.line_no();
    std::string expected = "step " + std::to_string(i) + ": label=";
    if (!text::starts_with(header, expected)) fail(header_line, "expected '" + expected + "<CODE>'");
    auto token = header.substr(expected.size());
    auto label = label_from_code(token);
    if (!label) fail(header_line, "unknown task label '" + std::string(token) + "'");

    TaskStep step;
    step.label = *label;
    int last_rank = -1;
    bool have_segment = false, have_transcript = false;
    while (!in.done() && text::starts_with(in.peek(), "  ") && !text::starts_with(in.peek(), "    ")) {
      auto line = in.next().substr(2);
      const auto line_no = in.line_no();
      bool is_param = text::starts_with(line, "param ");
      if (is_param) line = line.substr(6);
      auto [name, value] = key_value(line, line_no);
      int rank = rank_of(name);
      if (rank < 0 || (rank >= 2) != is_param) fail(line_no, "unknown field '" + std::string(name) + "'");
      if (rank <= last_rank) fail(line_no, "field '" + std::string(name) + "' out of order or repeated");
      last_rank = rank;

      auto& p = step.params;
      if (name == "segment") {
        step.source_segment = static_cast<int>(parse_int(value, line_no));
        have_segment = true;
      } else if (name == "transcript") {
        step.transcript = parse_quoted(value, line_no);
        have_transcript = true;
      } else if (name == "object_name") {
        p.object_name = parse_quoted(value, line_no);
      } else if (name == "object_position") {
        p.object_position = parse_point(value, line_no);
      } else if (name == "hand_laterality") {
        if (value == "Left") p.hand_laterality = Laterality::Left;
        else if (value == "Right") p.hand_laterality = Laterality::Right;
        else fail(line_no, "unknown laterality '" + std::string(value) + "'");
      } else if (name == "grasp_type") {
        p.grasp_type = parse_quoted(value, line_no);
      } else if (name == "hand_trajectory") {
        long n = parse_int(value, line_no);
        if (n < 0) fail(line_no, "negative trajectory length");
        std::vector<TrajectoryPoint> traj;
        traj.reserve(static_cast<std::size_t>(n));
        for (long k = 0; k < n; ++k) {
          auto pt = in.next();
          if (!text::starts_with(pt, "    ")) fail(in.line_no(), "expected trajectory point");
          auto parts = text::split_ws(pt);
          if (parts.size() != 2) fail(in.line_no(), "expected '<time> x,y,z'");
          TrajectoryPoint tp{parse_real(parts[0], in.line_no()), parse_point(parts[1], in.line_no())};
          if (!traj.empty() && !(tp.time > traj.back().time))
            fail(in.line_no(), "trajectory timestamps must be strictly increasing");
          traj.push_back(tp);
        }
        p.hand_trajectory = std::move(traj);
      } else if (name == "hinge") {
        p.hinge = parse_hinge(value, line_no);
      } else if (name == "start_pose") {
        p.start_pose = parse_pose(value, line_no);
      } else if (name == "end_pose") {
        p.end_pose = parse_pose(value, line_no);
      }
    }
    if (!have_segment || !have_transcript) fail(header_line, "step is missing segment or transcript");
    model.steps.push_back(std::move(step));
  }
  if (in.done() || in.next() != "end") fail(in.line_no() + 1, "expected 'end'");
  while (!in.done()) {
    if (!text::trim(in.next()).empty()) fail(in.line_no(), "trailing content after 'end'");
  }

  auto report = validate_gmr(model.labels());
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw conflict("step " + std::to_string(v.position) + ": " + v.message,
                   {{"position", std::to_string(v.position)}, {"rule", v.rule}});
  }
  return model;
}

}  // namespace ites::taskmodel
