// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <set>

#include "ites/random.hpp"
#include "ites/skillparams.hpp"
#include "ites/synthgen.hpp"
#include "support.hpp"

using namespace ites;
using namespace ites::skillparams;
using ites::test::dist;

namespace {

constexpr double kPi = std::numbers::pi;

struct Rotation {
  std::array<std::array<double, 3>, 3> m;
  Vec3 operator()(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
};

// Uniform random rotation from a normalized Gaussian quaternion.
Rotation random_rotation(Rng& rng) {
  double w = rng.normal(), x = rng.normal(), y = rng.normal(), z = rng.normal();
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n, x /= n, y /= n, z /= n;
  return {{{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
            {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
            {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}}};
}

Vec3 random_unit(Rng& rng) {
  Vec3 v{rng.normal(), rng.normal(), rng.normal()};
  return v * (1.0 / norm(v));
}

double angle_deg(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(dot(a, b) / (norm(a) * norm(b)), -1.0, 1.0)) * 180.0 / kPi;
}

int brute_quantize(const Vec3& v) {
  int best = -1;
  double best_dot = -2.0;
  int i = 0;
  for (int x = -1; x <= 1; ++x)
    for (int y = -1; y <= 1; ++y)
      for (int z = -1; z <= 1; ++z) {
        if (!x && !y && !z) continue;
        const Vec3 e{double(x), double(y), double(z)};
        const double d = dot(v, e) / (norm(v) * norm(e));
        if (d > best_dot + 1e-15) {
          best_dot = d;
          best = i;
        }
        ++i;
      }
  return best;
}

}  // namespace

TEST_SUITE("skillparams") {
  TEST_CASE("backproject examples") {
    CameraIntrinsics k{600, 600, 640, 360};
    auto p = backproject(640, 360, 1000, k);
    CHECK(p == Vec3{0, 0, 1});
    auto q = backproject(940, 360, 1200, k);
    CHECK(q.x == doctest::Approx(0.6));
    CHECK(q.z == doctest::Approx(1.2));
    CHECK(test::error_message_of([&] { backproject(1, 1, 0, k); }) == "invalid depth");
    CHECK(test::error_kind_of([] { backproject(1, 1, 10, CameraIntrinsics{0, 1, 0, 0}); }) == ErrorKind::BadRequest);
  }

  TEST_CASE("backproject then project returns the pixel") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
      CameraIntrinsics k{rng.uniform(100, 2000), rng.uniform(100, 2000), rng.uniform(0, 1280), rng.uniform(0, 720)};
      const double u = rng.uniform(-200, 1500), v = rng.uniform(-200, 900), d = rng.uniform(1, 10000);
      auto px = project(backproject(u, v, d, k), k);
      CHECK(std::abs(px.u - u) < 1e-9);
      CHECK(std::abs(px.v - v) < 1e-9);
    }
  }

  TEST_CASE("laterality") {
    Pixel obj{100, 100}, l{50, 50}, r{300, 300};
    CHECK(hand_laterality(obj, l, r) == Laterality::Left);
    CHECK(hand_laterality(obj, r, l) == Laterality::Right);
    CHECK(test::error_message_of([&] { hand_laterality(obj, obj, obj); }) == "ambiguous laterality");
    CHECK(test::error_message_of([&] { hand_laterality(std::nullopt, l, r); }) == "detection unavailable");
    CHECK(test::error_kind_of([&] { hand_laterality(obj, l, std::nullopt); }) == ErrorKind::FailedDependency);

    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
      Pixel o{rng.uniform(0, 640), rng.uniform(0, 480)}, a{rng.uniform(0, 640), rng.uniform(0, 480)},
          b{rng.uniform(0, 640), rng.uniform(0, 480)};
      auto x = hand_laterality(o, a, b), y = hand_laterality(o, b, a);
      CHECK(x != y);
      const bool left_closer = std::hypot(a.u - o.u, a.v - o.v) < std::hypot(b.u - o.u, b.v - o.v);
      CHECK((x == Laterality::Left) == left_closer);
    }
  }

  TEST_CASE("grasp fusion") {
    auto d = fuse_grasp_type({{"power", 0.6}, {"precision", 0.4}}, {{"power", 0.2}, {"precision", 0.8}});
    CHECK(d.label == "precision");
    CHECK(d.posterior.at("power") == doctest::Approx(0.12 / 0.44));
    CHECK(d.posterior.at("precision") == doctest::Approx(0.32 / 0.44));
    CHECK(d.posterior.at("power") == doctest::Approx(0.273).epsilon(1e-3));

    auto uniform = fuse_grasp_type({{"a", 0.2}, {"b", 0.5}, {"c", 0.3}}, {{"a", 1 / 3.0}, {"b", 1 / 3.0}, {"c", 1 / 3.0}});
    CHECK(uniform.label == "b");
    CHECK(fuse_grasp_type({{"a", 0.2}, {"b", 0.5}, {"c", 0.3}}, {}).label == "b");
    CHECK(fuse_grasp_type({{"b", 0.5}, {"a", 0.5}}, {}).label == "a");

    CHECK(test::error_message_of([] { fuse_grasp_type({{"power", 1}, {"precision", 0}}, {{"power", 0}, {"precision", 1}}); }) ==
          "inconsistent prior");
    CHECK(test::error_kind_of([] { fuse_grasp_type({{"a", 0.5}, {"b", 0.5}}, {{"a", 0.5}, {"c", 0.5}}); }) ==
          ErrorKind::BadRequest);
    CHECK(test::error_kind_of([] { fuse_grasp_type({{"a", 0.7}, {"b", 0.5}}, {}); }) == ErrorKind::BadRequest);

    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
      Distribution s, p;
      double zs = 0, zp = 0;
      for (auto g : {"lateral", "power", "precision", "hook"}) {
        s[g] = rng.uniform() + 1e-3, p[g] = rng.uniform() + 1e-3;
        zs += s[g], zp += p[g];
      }
      // Arbitrary positive scale factors vanish after renormalization.
      const double ks = rng.uniform(0.1, 10), kp = rng.uniform(0.1, 10);
      std::string best;
      double best_v = -1;
      for (auto& [g, v] : s) {
        const double prod = (ks * v) * (kp * p[g]);
        if (prod > best_v) best_v = prod, best = g;
      }
      for (auto& [g, v] : s) v /= zs;
      for (auto& [g, v] : p) v /= zp;
      CHECK(fuse_grasp_type(s, p).label == best);
    }
  }

  TEST_CASE("grasp tables") {
    auto t = GraspPriorTable::parse_csv("object,grasp,probability\ncup,power,0.25\ncup,precision,0.75\n");
    CHECK(t.prior_for("cup").at("precision") == 0.75);
    CHECK(t.prior_for("box").empty());
    auto s = parse_grasp_scores_csv("frame,grasp,probability\n3,power,1\n");
    CHECK(s.at(3).at("power") == 1.0);
    CHECK(test::error_kind_of([] { GraspPriorTable::parse_csv("object,grasp,probability\ncup,power\n"); }) ==
          ErrorKind::BadRequest);
  }

  TEST_CASE("hinge on a noiseless quarter circle") {
    std::vector<Vec3> pts;
    for (int i = 0; i < 20; ++i) {
      const double a = kPi / 2 * i / 19;
      pts.push_back({0.3 * std::cos(a), 0.3 * std::sin(a), 0});
    }
    auto fit = fit_hinge(pts);
    CHECK(dist(fit.params.center, {0, 0, 0}) < 1e-9);
    CHECK(std::abs(fit.params.radius - 0.3) < 1e-9);
    CHECK(std::abs(std::abs(fit.params.axis.z) - 1.0) < 1e-9);
    CHECK(std::abs(fit.params.end_angle - fit.params.start_angle - kPi / 2) < 1e-9);
    CHECK(fit.rms_residual < 1e-9);
    // Counter-clockwise about +z, so the right-hand axis is +z.
    CHECK(fit.params.axis.z > 0);
  }

  TEST_CASE("hinge errors") {
    std::vector<Vec3> two{{0, 0, 0}, {1, 0, 0}};
    CHECK(test::error_message_of([&] { fit_hinge(two); }) == "insufficient points");
    std::vector<Vec3> line{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
    CHECK(test::error_message_of([&] { fit_hinge(line); }) == "degenerate geometry");
    auto arc = synthgen::gen_arc({0, 0, 0}, {0, 0, 1}, 0.3, 0, kPi, 50, 0.2, 9);
    CHECK(test::error_message_of([&] { fit_hinge(arc.points); }) == "poor fit");
  }

  TEST_CASE("hinge recovers generated arcs exactly without noise") {
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
      const Vec3 c{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 2)};
      const Vec3 axis = random_unit(rng);
      const double r = rng.uniform(0.1, 1.0), a0 = rng.uniform(-kPi, kPi), sweep = rng.uniform(0.5, 3.0);
      const bool closing = rng.below(2);
      auto arc = synthgen::gen_arc(c, axis, r, a0, closing ? a0 - sweep : a0 + sweep, 30, 0.0, 1);
      auto fit = fit_hinge(arc.points);
      CHECK(dist(fit.params.center, arc.truth.center) < 1e-6 * r);
      CHECK(std::abs(fit.params.radius - r) < 1e-6 * r);
      CHECK(dist(fit.params.axis, arc.truth.axis) < 1e-6);
      CHECK(std::abs(fit.params.start_angle - arc.truth.start_angle) < 1e-6);
      CHECK(std::abs(fit.params.end_angle - arc.truth.end_angle) < 1e-6);
      CHECK(fit.params.sense == arc.truth.sense);
    }
  }

  TEST_CASE("hinge under noise") {
    int ok = 0;
    for (int seed = 0; seed < 100; ++seed) {
      auto arc = synthgen::gen_arc({0, 0, 0}, {0, 0, 1}, 0.3, 0, kPi, 50, 0.005, static_cast<std::uint64_t>(seed));
      auto fit = fit_hinge(arc.points);
      if (std::abs(fit.params.radius - 0.3) <= 0.005 && angle_deg(fit.params.axis, {0, 0, 1}) <= 2.0) ++ok;
    }
    CHECK(ok >= 95);

    auto y = synthgen::gen_arc({0.2, 0.1, 1.0}, {0, 1, 0}, 0.3, 0, kPi, 50, 0.005, 77);
    CHECK(angle_deg(fit_hinge(y.points).params.axis, {0, 1, 0}) <= 2.0);
  }

  TEST_CASE("hinge is equivariant under rigid motion") {
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
      auto arc = synthgen::gen_arc({rng.uniform(-1, 1), 0, 1}, random_unit(rng), rng.uniform(0.2, 0.8), 0,
                                   rng.uniform(0.5, 3.0), 25, 0.0, 2);
      const auto rot = random_rotation(rng);
      const Vec3 t{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
      std::vector<Vec3> moved;
      for (const auto& p : arc.points) moved.push_back(rot(p) + t);
      auto a = fit_hinge(arc.points).params, b = fit_hinge(moved).params;
      CHECK(dist(b.center, rot(a.center) + t) < 1e-6);
      CHECK(dist(b.axis, rot(a.axis)) < 1e-6);
      CHECK(std::abs(b.radius - a.radius) < 1e-6);
      CHECK(std::abs((b.end_angle - b.start_angle) - (a.end_angle - a.start_angle)) < 1e-6);
    }
  }

  TEST_CASE("hinge sense follows the reference axis") {
    auto open = synthgen::gen_arc({0, 0, 1}, {0, -1, 0}, 0.4, 0, 1.2, 20, 0, 1);
    auto close = synthgen::gen_arc({0, 0, 1}, {0, -1, 0}, 0.4, 1.2, 0, 20, 0, 1);
    CHECK(fit_hinge(open.points).params.sense == HingeSense::Opening);
    CHECK(fit_hinge(close.points).params.sense == HingeSense::Closing);
  }

  TEST_CASE("plane basis") {
    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
      const Vec3 a = random_unit(rng);
      auto [e1, e2] = plane_basis(a);
      CHECK(std::abs(norm(e1) - 1) < 1e-12);
      CHECK(std::abs(dot(e1, e2)) < 1e-12);
      CHECK(dist(cross(e1, e2), a) < 1e-12);
    }
  }

  TEST_CASE("codebook") {
    const auto& book = direction_codebook();
    std::set<std::array<int, 3>> triples;
    for (int i = 0; i < 26; ++i) {
      CHECK(std::abs(norm(book[static_cast<std::size_t>(i)]) - 1) < 1e-15);
      auto t = codebook_triple(i);
      triples.insert(t);
      CHECK(codebook_index(t[0], t[1], t[2]) == i);
      CHECK(quantize_direction(book[static_cast<std::size_t>(i)]) == i);
    }
    CHECK(triples.size() == 26);
    CHECK(std::is_sorted(triples.begin(), triples.end()));
    CHECK(codebook_triple(0) == std::array<int, 3>{-1, -1, -1});
    CHECK(codebook_triple(25) == std::array<int, 3>{1, 1, 1});
    CHECK(test::error_kind_of([] { codebook_index(0, 0, 0); }) == ErrorKind::BadRequest);
  }

  TEST_CASE("quantize examples") {
    CHECK(quantize_direction({1, 0, 0}) == codebook_index(1, 0, 0));
    CHECK(quantize_direction({0.9, 0.05, 0}) == codebook_index(1, 0, 0));
    CHECK(quantize_direction({2, 2, 2}) == codebook_index(1, 1, 1));
    CHECK(test::error_message_of([] { quantize_direction({0, 0, 1e-12}); }) == "undefined direction");
  }

  TEST_CASE("quantize agrees with brute force and respects the symmetry group") {
    Rng rng(7);
    const std::array<std::array<int, 3>, 6> perms{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    for (int i = 0; i < 1000; ++i) {
      const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
      const int q = quantize_direction(v);
      CHECK(q == brute_quantize(v));
      CHECK(quantize_direction(v * rng.uniform(1e-3, 1e3)) == q);

      const auto& perm = perms[rng.below(6)];
      const std::array<int, 3> sign{rng.below(2) ? 1 : -1, rng.below(2) ? 1 : -1, rng.below(2) ? 1 : -1};
      auto act = [&](const std::array<double, 3>& c) {
        return std::array<double, 3>{sign[0] * c[perm[0]], sign[1] * c[perm[1]], sign[2] * c[perm[2]]};
      };
      auto gv = act({v.x, v.y, v.z});
      auto t = codebook_triple(q);
      auto gt = act({double(t[0]), double(t[1]), double(t[2])});
      CHECK(quantize_direction({gv[0], gv[1], gv[2]}) ==
            codebook_index(int(gt[0]), int(gt[1]), int(gt[2])));
    }
  }

  TEST_CASE("arm pose") {
    ArmJoints straight{{0, 0, 0}, {0.3, 0, 0}, {0.6, 0, 0}};
    ArmJoints bent{{0, 0, 0}, {0.3, 0, 0}, {0.3, -0.3, 0}};
    auto code = encode_arm_pose(straight, bent);
    const int px = codebook_index(1, 0, 0);
    CHECK(code.directions == std::array<int, 4>{px, px, px, codebook_index(0, -1, 0)});
    ArmJoints collapsed{{0, 0, 0}, {0, 0, 0}, {1, 0, 0}};
    CHECK(test::error_message_of([&] { encode_arm_pose(collapsed, bent); }) == "undefined direction");
  }

  TEST_CASE("detection tracks") {
    const std::string csv =
        "frame,kind,x,y,z,confidence\n"
        "0,object,10,20,800,0.9\n"
        "0,right_hand,30,40,900,1\n"
        "2,right_hand,31,41,901,0.4\n"
        "3,right_hand,32,42,0,1\n";
    auto t = DetectionTrack::parse_csv(csv);
    CHECK(DetectionTrack::parse_csv(t.to_csv()).to_csv() == t.to_csv());
    CHECK(t.pixel(0, TrackKind::Object)->u == 10);
    CHECK_FALSE(t.pixel(2, TrackKind::RightHand, 0.5));
    std::array kinds{TrackKind::RightHand};
    CHECK(t.first_frame_with(1, 10, kinds) == 2);
    CHECK(t.last_frame_with(0, 10, kinds) == 3);
    CHECK_FALSE(t.first_frame_with(4, 10, kinds));
    CHECK_FALSE(t.arm_pose_at(0));

    DetectionTrack other;
    other.add(0, TrackKind::Object, {1, 2, 3, 1});
    t.merge(other);
    CHECK(t.find(0, TrackKind::Object)->x == 1);

    CHECK(test::error_kind_of([] { DetectionTrack::parse_csv("frame,kind,x,y,z,confidence\n0,foot,1,1,1,1\n"); }) ==
          ErrorKind::BadRequest);
    CHECK(test::error_kind_of([] { DetectionTrack::parse_csv("frame,kind,x,y,z,confidence\n0,object,1,1,1,2\n"); }) ==
          ErrorKind::BadRequest);
  }

  TEST_CASE("arm pose from a track") {
    DetectionTrack t;
    t.add(5, TrackKind::LShoulder, {0, 0, 0});
    t.add(5, TrackKind::LElbow, {0, 0.3, 0});
    t.add(5, TrackKind::LWrist, {0, 0.6, 0});
    t.add(5, TrackKind::RShoulder, {0, 0, 0});
    t.add(5, TrackKind::RElbow, {0.3, 0, 0});
    t.add(5, TrackKind::RWrist, {0.3, 0, 0.3});
    auto pose = t.arm_pose_at(5);
    REQUIRE(pose);
    CHECK(pose->directions ==
          std::array<int, 4>{codebook_index(0, 1, 0), codebook_index(0, 1, 0), codebook_index(1, 0, 0),
                             codebook_index(0, 0, 1)});
  }

  TEST_CASE("trajectory extraction") {
    CameraIntrinsics k{500, 500, 320, 240};
    DetectionTrack full;
    for (int f = 10; f < 20; ++f) full.add(f, TrackKind::LeftHand, {300.0 + f, 200.0 - f, 1000.0 + f, 1.0});
    auto traj = extract_trajectory(full, k, Laterality::Left, 10, 20, 30.0);
    REQUIRE(traj.size() == 10);
    for (int i = 0; i < 10; ++i) {
      const int f = 10 + i;
      CHECK(traj[static_cast<std::size_t>(i)].time == doctest::Approx(f / 30.0));
      CHECK(traj[static_cast<std::size_t>(i)].position == backproject(300.0 + f, 200.0 - f, 1000.0 + f, k));
    }
    CHECK(test::error_message_of([&] { extract_trajectory(full, k, Laterality::Right, 10, 20, 30.0); }) ==
          "trajectory unavailable");

    DetectionTrack zero;
    for (int f = 0; f < 5; ++f) zero.add(f, TrackKind::RightHand, {1, 1, 1000, 0.0});
    CHECK(test::error_kind_of([&] { extract_trajectory(zero, k, Laterality::Right, 0, 5, 30.0); }) ==
          ErrorKind::FailedDependency);

    DetectionTrack alternating;
    for (int f = 0; f < 20; ++f) alternating.add(f, TrackKind::RightHand, {1, 1, 1000, f % 2 ? 0.0 : 1.0});
    auto half = extract_trajectory(alternating, k, Laterality::Right, 0, 20, 30.0);
    CHECK(half.size() == 10);
    for (std::size_t i = 1; i < half.size(); ++i) CHECK(half[i].time > half[i - 1].time);
  }
}
