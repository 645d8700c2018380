// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include "ites/skillparams.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "ites/error.hpp"
#include "ites/text.hpp"

namespace ites::skillparams {
namespace {

Eigen::Vector3d to_eigen(const Vec3& v) { return {v.x, v.y, v.z}; }
Vec3 from_eigen(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

double wrap_pi(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

void check_sum(const Distribution& d, const char* what) {
  double s = 0.0;
  for (const auto& [k, p] : d) {
    if (!(p >= 0.0)) throw bad_request(std::string(what) + " has a negative probability for '" + k + "'");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-6)
    throw bad_request(std::string(what) + " must sum to 1 (got " + std::to_string(s) + ")");
}

constexpr std::array<std::string_view, kTrackKinds> kKindNames{
    "object", "left_hand", "right_hand", "l_shoulder", "l_elbow", "l_wrist", "r_shoulder", "r_elbow", "r_wrist"};

constexpr std::array<TrackKind, 6> kJointKinds{TrackKind::LShoulder, TrackKind::LElbow, TrackKind::LWrist,
                                               TrackKind::RShoulder, TrackKind::RElbow, TrackKind::RWrist};

}  // namespace

Vec3 backproject(double u, double v, double depth_mm, const CameraIntrinsics& k) {
  if (!(depth_mm > 0.0)) throw bad_request("invalid depth", {{"depth", std::to_string(depth_mm)}});
  if (!(k.fx > 0.0) || !(k.fy > 0.0)) throw bad_request("focal lengths must be positive");
  const double z = depth_mm / 1000.0;
  return {(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z};
}

Pixel project(const Vec3& p, const CameraIntrinsics& k) {
  if (!(p.z > 0.0)) throw bad_request("point behind the camera");
  return {k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy};
}

Laterality hand_laterality(const std::optional<Pixel>& object, const std::optional<Pixel>& left,
                           const std::optional<Pixel>& right) {
  if (!object || !left || !right) {
    std::string missing = !object ? "object" : !left ? "left_hand" : "right_hand";
    throw failed_dependency("detection unavailable", {{"daemon", "laterality"}, {"missing", missing}});
  }
  const double dl = std::hypot(left->u - object->u, left->v - object->v);
  const double dr = std::hypot(right->u - object->u, right->v - object->v);
  if (std::abs(dl - dr) <= 1e-6) throw failed_dependency("ambiguous laterality", {{"daemon", "laterality"}});
  return dl < dr ? Laterality::Left : Laterality::Right;
}

// ---------------------------------------------------------------------------

GraspDecision fuse_grasp_type(const Distribution& scores, const Distribution& prior) {
  if (scores.empty()) throw bad_request("grasp classifier scores are empty");
  check_sum(scores, "grasp classifier scores");
  if (!prior.empty()) {
    check_sum(prior, "grasp prior");
    bool same = prior.size() == scores.size() &&
                std::equal(scores.begin(), scores.end(), prior.begin(),
                           [](const auto& a, const auto& b) { return a.first == b.first; });
    if (!same) throw bad_request("grasp prior and classifier scores cover different grasp vocabularies");
  }
  GraspDecision out;
  double z = 0.0;
  for (const auto& [grasp, p] : scores) {
    const double w = prior.empty() ? 1.0 : prior.at(grasp);
    out.posterior[grasp] = p * w;
    z += p * w;
  }
  if (!(z > 0.0)) throw failed_dependency("inconsistent prior", {{"daemon", "grasp_type"}});
  double best = -1.0;
  for (auto& [grasp, p] : out.posterior) {
    p /= z;
    if (p > best) {
      best = p;
      out.label = grasp;
    }
  }
  return out;
}

GraspPriorTable GraspPriorTable::parse_csv(std::string_view text_in) {
  GraspPriorTable table;
  auto lines = text::split_lines(text_in);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto f = text::csv_fields(line);
    if (i == 0 && f.size() == 3 && f[0] == "object") continue;
    auto p = f.size() == 3 ? text::to_double(f[2]) : std::nullopt;
    if (!p || *p < 0.0 || *p > 1.0)
      throw bad_request("grasp prior row " + std::to_string(i + 1) + ": expected object,grasp,probability");
    table.entries_[std::string(text::trim(f[0]))][std::string(text::trim(f[1]))] = *p;
  }
  for (const auto& [object, dist] : table.entries_) check_sum(dist, ("grasp prior for '" + object + "'").c_str());
  return table;
}

Distribution GraspPriorTable::prior_for(std::string_view object) const {
  auto it = entries_.find(object);
  return it == entries_.end() ? Distribution{} : it->second;
}

GraspScores parse_grasp_scores_csv(std::string_view text_in) {
  GraspScores out;
  auto lines = text::split_lines(text_in);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto f = text::csv_fields(line);
    if (i == 0 && f.size() == 3 && f[0] == "frame") continue;
    auto frame = f.size() == 3 ? text::to_long(f[0]) : std::nullopt;
    auto p = f.size() == 3 ? text::to_double(f[2]) : std::nullopt;
    if (!frame || !p || *frame < 0 || *p < 0.0 || *p > 1.0)
      throw bad_request("grasp score row " + std::to_string(i + 1) + ": expected frame,grasp,probability");
    out[static_cast<int>(*frame)][std::string(text::trim(f[1]))] = *p;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::array<Vec3, 2> plane_basis(const Vec3& axis) {
  const double ax[3] = {std::abs(axis.x), std::abs(axis.y), std::abs(axis.z)};
  const int least = ax[0] <= ax[1] && ax[0] <= ax[2] ? 0 : (ax[1] <= ax[2] ? 1 : 2);
  Vec3 w{least == 0 ? 1.0 : 0.0, least == 1 ? 1.0 : 0.0, least == 2 ? 1.0 : 0.0};
  Vec3 e1 = cross(axis, w);
  e1 *= 1.0 / norm(e1);
  Vec3 e2 = cross(axis, e1);
  e2 *= 1.0 / norm(e2);
  return {e1, e2};
}

HingeFit fit_hinge(std::span<const Vec3> points, const HingeFitOptions& options) {
  const std::size_t n = points.size();
  if (n < 3) throw failed_dependency("insufficient points", {{"daemon", "hinge"}, {"points", std::to_string(n)}});

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : points) centroid += to_eigen(p);
  centroid /= static_cast<double>(n);
  Eigen::MatrixXd centered(n, 3);
  for (std::size_t i = 0; i < n; ++i) centered.row(static_cast<Eigen::Index>(i)) = (to_eigen(points[i]) - centroid).transpose();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) < 1e-9 * sv(0)) throw failed_dependency("degenerate geometry", {{"daemon", "hinge"}});

  const Eigen::Matrix3d scatter = centered.transpose() * centered;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  Vec3 normal = from_eigen(eig.eigenvectors().col(0).normalized());  // eigenvalues ascending

  // Kasa fit in the plane: x^2 + y^2 = 2a x + 2b y + c.
  auto basis = plane_basis(normal);
  const Vec3 c0 = from_eigen(centroid);
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = points[i] - c0;
    const double x = dot(d, basis[0]), y = dot(d, basis[1]);
    const auto r = static_cast<Eigen::Index>(i);
    a(r, 0) = 2.0 * x;
    a(r, 1) = 2.0 * y;
    a(r, 2) = 1.0;
    rhs(r) = x * x + y * y;
  }
  const Eigen::Vector3d sol = a.colPivHouseholderQr().solve(rhs);
  const double r2 = sol(2) + sol(0) * sol(0) + sol(1) * sol(1);
  if (!(r2 > 0.0) || !std::isfinite(r2)) throw failed_dependency("degenerate geometry", {{"daemon", "hinge"}});
  const double radius = std::sqrt(r2);
  const Vec3 center = c0 + basis[0] * sol(0) + basis[1] * sol(1);

  auto angles_in = [&](const std::array<Vec3, 2>& b) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 d = points[i] - center;
      out[i] = std::atan2(dot(d, b[1]), dot(d, b[0]));
    }
    return out;
  };
  auto sweep_of = [](const std::vector<double>& th) {
    double s = 0.0;
    for (std::size_t i = 1; i < th.size(); ++i) s += wrap_pi(th[i] - th[i - 1]);
    return s;
  };

  auto theta = angles_in(basis);
  double sweep = sweep_of(theta);
  if (sweep < 0.0) {
    normal = -normal;
    basis = plane_basis(normal);
    theta = angles_in(basis);
    sweep = sweep_of(theta);
  }
  if (sweep > 2.0 * std::numbers::pi)
    throw failed_dependency("sweep exceeds one revolution", {{"daemon", "hinge"}});

  double sq = 0.0;
  for (const auto& p : points) {
    const Vec3 d = p - center;
    const double h = dot(d, normal);
    const Vec3 in_plane = d - normal * h;
    const double radial = norm(in_plane) - radius;
    sq += h * h + radial * radial;
  }
  HingeFit fit;
  fit.rms_residual = std::sqrt(sq / static_cast<double>(n));
  if (fit.rms_residual > options.max_rms_residual)
    throw failed_dependency("poor fit", {{"daemon", "hinge"}, {"rms", std::to_string(fit.rms_residual)}});

  fit.params.center = center;
  fit.params.axis = normal;
  fit.params.radius = radius;
  fit.params.start_angle = theta.front();
  fit.params.end_angle = theta.front() + sweep;
  fit.params.sense = dot(normal, options.reference_axis) >= 0.0 ? HingeSense::Opening : HingeSense::Closing;
  return fit;
}

// ---------------------------------------------------------------------------

const std::array<Vec3, 26>& direction_codebook() {
  static const std::array<Vec3, 26> book = [] {
    std::array<Vec3, 26> out{};
    std::size_t i = 0;
    for (int x = -1; x <= 1; ++x)
      for (int y = -1; y <= 1; ++y)
        for (int z = -1; z <= 1; ++z) {
          if (x == 0 && y == 0 && z == 0) continue;
          const double len = std::sqrt(static_cast<double>(x * x + y * y + z * z));
          out[i++] = {x / len, y / len, z / len};
        }
    return out;
  }();
  return book;
}

std::array<int, 3> codebook_triple(int index) {
  if (index < 0 || index >= 26) throw bad_request("codebook index out of range");
  const int packed = index < 13 ? index : index + 1;
  return {packed / 9 - 1, (packed / 3) % 3 - 1, packed % 3 - 1};
}

int codebook_index(int x, int y, int z) {
  if (x < -1 || x > 1 || y < -1 || y > 1 || z < -1 || z > 1 || (x == 0 && y == 0 && z == 0))
    throw bad_request("not a codebook direction");
  const int packed = 9 * (x + 1) + 3 * (y + 1) + (z + 1);
  return packed < 13 ? packed : packed - 1;
}

int quantize_direction(const Vec3& v) {
  const double len = norm(v);
  if (!(len > 1e-9)) throw failed_dependency("undefined direction", {{"daemon", "pose"}});
  const Vec3 u = v * (1.0 / len);
  const auto& book = direction_codebook();
  int best = 0;
  double best_dot = dot(u, book[0]);
  for (int i = 1; i < 26; ++i) {
    const double d = dot(u, book[static_cast<std::size_t>(i)]);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return best;
}

ArmPoseCode encode_arm_pose(const ArmJoints& left, const ArmJoints& right) {
  ArmPoseCode code;
  code.directions = {quantize_direction(left.elbow - left.shoulder), quantize_direction(left.wrist - left.elbow),
                     quantize_direction(right.elbow - right.shoulder), quantize_direction(right.wrist - right.elbow)};
  return code;
}

// ---------------------------------------------------------------------------

std::string_view to_string(TrackKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<TrackKind> track_kind_from(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<TrackKind>(i);
  return std::nullopt;
}

void DetectionTrack::add(int frame, TrackKind kind, const Detection& d) {
  frames_[frame][static_cast<std::size_t>(kind)] = d;
}

void DetectionTrack::merge(const DetectionTrack& other) {
  for (const auto& [frame, row] : other.frames_)
    for (std::size_t k = 0; k < kTrackKinds; ++k)
      if (row[k]) frames_[frame][k] = row[k];
}

const Detection* DetectionTrack::find(int frame, TrackKind kind) const {
  auto it = frames_.find(frame);
  if (it == frames_.end()) return nullptr;
  const auto& slot = it->second[static_cast<std::size_t>(kind)];
  return slot ? &*slot : nullptr;
}

std::optional<Pixel> DetectionTrack::pixel(int frame, TrackKind kind, double min_confidence) const {
  const auto* d = find(frame, kind);
  if (!d || d->confidence < min_confidence) return std::nullopt;
  return Pixel{d->x, d->y};
}

std::optional<int> DetectionTrack::first_frame_with(int begin, int end, std::span<const TrackKind> kinds) const {
  for (auto it = frames_.lower_bound(begin); it != frames_.end() && it->first < end; ++it) {
    bool all = std::all_of(kinds.begin(), kinds.end(),
                           [&](TrackKind k) { return it->second[static_cast<std::size_t>(k)].has_value(); });
    if (all) return it->first;
  }
  return std::nullopt;
}

std::optional<int> DetectionTrack::last_frame_with(int begin, int end, std::span<const TrackKind> kinds) const {
  std::optional<int> last;
  for (auto it = frames_.lower_bound(begin); it != frames_.end() && it->first < end; ++it) {
    bool all = std::all_of(kinds.begin(), kinds.end(),
                           [&](TrackKind k) { return it->second[static_cast<std::size_t>(k)].has_value(); });
    if (all) last = it->first;
  }
  return last;
}

std::optional<ArmPoseCode> DetectionTrack::arm_pose_at(int frame) const {
  std::array<Vec3, 6> j;
  for (std::size_t i = 0; i < kJointKinds.size(); ++i) {
    const auto* d = find(frame, kJointKinds[i]);
    if (!d) return std::nullopt;
    j[i] = {d->x, d->y, d->z};
  }
  return encode_arm_pose({j[0], j[1], j[2]}, {j[3], j[4], j[5]});
}

DetectionTrack DetectionTrack::parse_csv(std::string_view text_in) {
  DetectionTrack track;
  auto lines = text::split_lines(text_in);
  if (lines.empty() || text::trim(lines[0]) != "frame,kind,x,y,z,confidence")
    throw bad_request("detection track header must be 'frame,kind,x,y,z,confidence'");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto line = text::trim(lines[i]);
    if (line.empty()) continue;
    const std::string row = "track row " + std::to_string(i + 1);
    auto f = text::split(line, ',');
    if (f.size() != 6) throw bad_request(row + ": expected 6 columns");
    auto frame = text::to_long(f[0]);
    auto kind = track_kind_from(text::trim(f[1]));
    auto x = text::to_double(f[2]), y = text::to_double(f[3]), z = text::to_double(f[4]);
    auto c = text::to_double(f[5]);
    if (!frame || *frame < 0) throw bad_request(row + ": invalid frame index");
    if (!kind) throw bad_request(row + ": unknown kind '" + std::string(f[1]) + "'");
    if (!x || !y || !z) throw bad_request(row + ": invalid coordinate");
    if (!c || *c < 0.0 || *c > 1.0) throw bad_request(row + ": confidence must lie in [0,1]");
    track.add(static_cast<int>(*frame), *kind, {*x, *y, *z, *c});
  }
  return track;
}

std::string DetectionTrack::to_csv() const {
  std::string out = "frame,kind,x,y,z,confidence\n";
  char buf[200];
  for (const auto& [frame, row] : frames_) {
    for (std::size_t k = 0; k < kTrackKinds; ++k) {
      if (!row[k]) continue;
      const auto& d = *row[k];
      std::snprintf(buf, sizeof buf, "%d,%s,%.9g,%.9g,%.9g,%.6g\n", frame,
                    kKindNames[k].data(), d.x, d.y, d.z, d.confidence);
      out += buf;
    }
  }
  return out;
}

std::vector<TrajectoryPoint> extract_trajectory(const DetectionTrack& track, const CameraIntrinsics& k,
                                                Laterality hand, int begin, int end, double frame_rate,
                                                double min_confidence) {
  if (!(frame_rate > 0.0)) throw bad_request("frame rate must be positive");
  const TrackKind kind = hand == Laterality::Left ? TrackKind::LeftHand : TrackKind::RightHand;
  std::vector<TrajectoryPoint> out;
  for (int f = begin; f < end; ++f) {
    const auto* d = track.find(f, kind);
    if (!d || d->confidence < min_confidence || !(d->z > 0.0)) continue;
    out.push_back({f / frame_rate, backproject(d->x, d->y, d->z, k)});
  }
  if (out.empty())
    throw failed_dependency("trajectory unavailable",
                            {{"daemon", "trajectory"}, {"frames", std::to_string(begin) + "-" + std::to_string(end)}});
  return out;
}

}  // namespace ites::skillparams
