// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <map>

#include "ites/bundle.hpp"
#include "ites/synthgen.hpp"
#include "ites/text.hpp"
#include "support.hpp"

using namespace ites;
using namespace ites::synthgen;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = text::read_file(e.path());
  return files;
}

Script alternating(std::initializer_list<double> durations) {
  Script s;
  Motion m = Motion::Move;
  for (double d : durations) {
    s.push_back({m, d});
    m = m == Motion::Move ? Motion::Pause : Motion::Move;
  }
  return s;
}

bool matches(const std::vector<int>& found, const std::vector<int>& truth, int tol) {
  if (found.size() != truth.size()) return false;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (std::abs(found[i] - truth[i]) > tol) return false;
  return true;
}

}  // namespace

TEST_SUITE("synthgen") {
  TEST_CASE("random scripts alternate within bounds") {
    Rng rng(5);
    for (int pauses = 0; pauses <= 8; ++pauses) {
      auto s = random_script(rng, pauses, 0.5, 3.0);
      REQUIRE(s.size() == static_cast<std::size_t>(2 * pauses + 1));
      for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s[i].mode == (i % 2 == 0 ? Motion::Move : Motion::Pause));
        CHECK(s[i].duration >= 0.5);
        CHECK(s[i].duration < 3.0);
      }
    }
  }

  TEST_CASE("stop-go video layout") {
    auto v = gen_stopgo(alternating({1.0, 1.0, 1.0}));
    CHECK(v.frames.size() == 90);
    CHECK(v.centers.size() == 90);
    CHECK(v.frames[0].width == 128);
    CHECK(v.frames[0].height == 128);
    REQUIRE(v.truth.size() == 1);
    CHECK(std::abs(v.truth[0] - 44) <= 2);
    // Stationary during the pause, moving otherwise.
    CHECK(v.centers[40].u == v.centers[45].u);
    CHECK(v.centers[40].v == v.centers[45].v);
    CHECK(std::hypot(v.centers[11].u - v.centers[10].u, v.centers[11].v - v.centers[10].v) == doctest::Approx(1.0));
  }

  TEST_CASE("stop-go is deterministic per seed") {
    auto s = alternating({1.0, 0.8, 1.0});
    auto a = gen_stopgo(s, {.seed = 4});
    auto b = gen_stopgo(s, {.seed = 4});
    auto c = gen_stopgo(s, {.seed = 5});
    REQUIRE(a.frames.size() == b.frames.size());
    bool same = true, differs = false;
    for (std::size_t i = 0; i < a.frames.size(); ++i) {
      same &= a.frames[i].luma == b.frames[i].luma;
      differs |= a.frames[i].luma != c.frames[i].luma;
    }
    CHECK(same);
    CHECK(differs);
  }

  TEST_CASE("degenerate scripts are rejected") {
    CHECK(test::error_message_of([] { gen_stopgo({}); }) == "degenerate script");
    CHECK(test::error_message_of([] { gen_stopgo(alternating({1.0, 0.3, 1.0})); }) == "degenerate script");
    Script twice{{Motion::Move, 1.0}, {Motion::Move, 1.0}};
    CHECK(test::error_kind_of([&] { gen_stopgo(twice); }) == ErrorKind::BadRequest);
  }

  TEST_CASE("three pauses are recovered") {
    auto v = gen_stopgo(alternating({1.5, 1.5, 1.5, 1.5, 1.5, 1.5, 1.5}), {.seed = 9});
    auto diag = segmentation::run_chain(segmentation::motion_signal(v.frames));
    REQUIRE(v.truth.size() == 3);
    CHECK(matches(diag.stops.frames, v.truth, 2));
  }

  TEST_CASE("pauses produce zero motion away from the edges") {
    auto v = gen_stopgo(alternating({1.0, 2.0, 1.0}), {.seed = 2});
    auto raw = segmentation::motion_signal(v.frames);
    const int mid = v.truth[0];
    // The smoothing window spans the block, so stillness gives only noise.
    for (int i = mid - 10; i <= mid + 10; ++i) CHECK(raw.values[static_cast<std::size_t>(i)] < 0.05);
    CHECK(raw.values[10] > 0.1);
  }

  TEST_CASE("a move-only script has no stops") {
    auto v = gen_stopgo(alternating({4.0}), {.seed = 1});
    CHECK(v.truth.empty());
    auto diag = segmentation::run_chain(segmentation::motion_signal(v.frames));
    CHECK(diag.stops.frames.empty());
  }

  TEST_CASE("stop-go bundles load") {
    test::TempDir dir;
    auto v = gen_stopgo(alternating({1.5, 1.5, 1.5}), {.seed = 3});
    write_stopgo(v, dir / "a", "a", true);
    auto b = bundle::load(dir / "a");
    CHECK(b->frame_paths.size() == v.frames.size());
    REQUIRE(b->signal);
    CHECK(b->signal->values.size() + 1 == v.frames.size());
    CHECK(text::read_file(dir / "a" / "truth_stops.csv").find(std::to_string(v.truth[0])) != std::string::npos);
  }

  TEST_CASE("arcs") {
    const Vec3 center{0.1, -0.2, 1.5};
    auto a = gen_arc(center, {0, 0, 2}, 0.3, 0.0, 1.0, 25, 0.0, 1);
    REQUIRE(a.points.size() == 25);
    for (const auto& p : a.points) {
      CHECK(norm(p - center) == doctest::Approx(0.3).epsilon(1e-12));
      CHECK(p.z == doctest::Approx(1.5));
    }
    CHECK(a.truth.end_angle - a.truth.start_angle == doctest::Approx(1.0));
    auto fit = skillparams::fit_hinge(a.points);
    CHECK(fit.rms_residual < 1e-9);
    CHECK(norm(fit.params.center - center) < 1e-9);

    auto reversed = gen_arc(center, {0, 0, 1}, 0.3, 1.0, 0.0, 25, 0.0, 1);
    CHECK(reversed.truth.axis.z == doctest::Approx(-1.0));
    CHECK(reversed.truth.end_angle - reversed.truth.start_angle == doctest::Approx(1.0));

    CHECK(test::error_kind_of([] { gen_arc({}, {0, 0, 1}, 0.3, 0, 1, 2, 0, 0); }) == ErrorKind::BadRequest);
    CHECK(test::error_kind_of([] { gen_arc({}, {0, 0, 1}, 0.0, 0, 1, 5, 0, 0); }) == ErrorKind::BadRequest);
    CHECK(test::error_kind_of([] { gen_arc({}, {0, 0, 0}, 0.3, 0, 1, 5, 0, 0); }) == ErrorKind::BadRequest);
  }

  TEST_CASE("scenario names") {
    for (auto s : all_scenarios()) CHECK(scenario_from(to_string(s)) == s);
    CHECK(all_scenarios().size() == 4);
    CHECK(to_string(Scenario::PickBringPlace) == "pick_bring_place");
    CHECK(test::error_message_of([] { scenario_from("juggle"); }) == "unknown scenario");
  }

  TEST_CASE("scenarios are byte-identical per seed") {
    test::TempDir dir;
    for (auto s : all_scenarios()) {
      const std::string name(to_string(s));
      auto a = gen_scenario(s, dir / (name + "-a"));
      auto b = gen_scenario(s, dir / (name + "-b"));
      CHECK(snapshot(dir / (name + "-a")) == snapshot(dir / (name + "-b")));
      CHECK(a.stops == b.stops);
    }
    gen_scenario(Scenario::ThrowAway, dir / "other", 7);
    CHECK(snapshot(dir / "other") != snapshot(dir / "throw_away-a"));
  }

  TEST_CASE("scenario truth") {
    const auto& pbp = test::scenario(Scenario::PickBringPlace).truth;
    CHECK(pbp.id == "pick_bring_place");
    CHECK(pbp.expected.size() == 5);
    CHECK(pbp.stops.size() == 7);
    CHECK(pbp.review.front() == "ignore 0");

    for (auto s : all_scenarios()) {
      const auto& f = test::scenario(s);
      CHECK(fs::exists(f.dir / "expected_labels.csv"));
      CHECK(fs::exists(f.dir / "review.txt"));
      auto b = bundle::load(f.dir);
      CHECK(static_cast<int>(b->frame_paths.size()) == f.truth.frame_count);
      CHECK(taskmodel::validate_gmr(f.truth.expected).ok());
      auto diag = segmentation::run_chain(bundle::raw_signal(*b));
      INFO(to_string(s));
      // Scenario pauses last 1.2 s; each stop must land in the middle half.
      CHECK(matches(diag.stops.frames, f.truth.stops, 9));
    }
  }
}
