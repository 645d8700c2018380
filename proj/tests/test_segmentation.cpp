// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "ites/random.hpp"
#include "ites/segmentation.hpp"
#include "ites/synthgen.hpp"
#include "support.hpp"

using namespace ites;
using namespace ites::segmentation;

namespace {

Frame random_frame(Rng& rng, int w, int h, double t) {
  Frame f{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h), t};
  for (auto& p : f.luma) p = static_cast<std::uint8_t>(rng.below(256));
  return f;
}

// Window sum by direct enumeration of the truncated neighbourhood.
std::pair<std::uint64_t, int> naive_window(const Frame& f, int x, int y, int window) {
  const int lo = window / 2, hi = window - 1 - lo;
  std::uint64_t sum = 0;
  int count = 0;
  for (int yy = y - lo; yy <= y + hi; ++yy)
    for (int xx = x - lo; xx <= x + hi; ++xx)
      if (xx >= 0 && yy >= 0 && xx < f.width && yy < f.height) {
        sum += f.at(xx, yy);
        ++count;
      }
  return {sum, count};
}

std::vector<double> naive_motion(const std::vector<Frame>& frames, int window) {
  std::vector<double> out;
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    double total = 0.0;
    for (int y = 0; y < frames[t].height; ++y)
      for (int x = 0; x < frames[t].width; ++x) {
        auto [a, n] = naive_window(frames[t + 1], x, y, window);
        auto [b, m] = naive_window(frames[t], x, y, window);
        REQUIRE(n == m);
        total += static_cast<double>(a > b ? a - b : b - a) / n;
      }
    out.push_back(total / (frames[t].width * frames[t].height));
  }
  return out;
}

// Same quantity computed as the mean of |mean_a - mean_b| in floating point.
std::vector<double> float_motion(const std::vector<Frame>& frames, int window) {
  std::vector<double> out;
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    double total = 0.0;
    for (int y = 0; y < frames[t].height; ++y)
      for (int x = 0; x < frames[t].width; ++x) {
        auto [a, n] = naive_window(frames[t + 1], x, y, window);
        auto [b, m] = naive_window(frames[t], x, y, window);
        total += std::abs(static_cast<double>(a) / n - static_cast<double>(b) / m);
      }
    out.push_back(total / (frames[t].width * frames[t].height));
  }
  return out;
}

MotionSignal sine(double freq, double fs, int n, double amplitude = 1.0, double offset = 0.0) {
  MotionSignal s{{}, fs};
  for (int i = 0; i < n; ++i) s.values.push_back(offset + amplitude * std::sin(2 * std::numbers::pi * freq * i / fs));
  return s;
}

// Amplitude of the `freq` component over the middle half of a 9000-sample
// record; the window holds a whole number of periods for every tested tone.
double tone_amplitude(const std::vector<double>& v, double freq, double fs) {
  double a = 0.0, b = 0.0;
  const std::size_t lo = 2250, hi = 6750;
  for (std::size_t i = lo; i < hi; ++i) {
    const double w = 2 * std::numbers::pi * freq * static_cast<double>(i) / fs;
    a += v[i] * std::sin(w);
    b += v[i] * std::cos(w);
  }
  return 2.0 * std::hypot(a, b) / static_cast<double>(hi - lo);
}

// Squared magnitude of an analog second-order Butterworth at the prewarped
// frequency corresponding to f.
double butterworth_power(double f, double fc, double fs) {
  const double r = std::tan(std::numbers::pi * f / fs) / std::tan(std::numbers::pi * fc / fs);
  return 1.0 / (1.0 + std::pow(r, 4));
}

}  // namespace

TEST_SUITE("segmentation") {
  TEST_CASE("luminance") {
    CHECK(luminance_of(255, 255, 255) == 255);
    CHECK(luminance_of(0, 0, 0) == 0);
    CHECK(luminance_of(255, 0, 0) == 76);
    CHECK(luminance_of(0, 255, 0) == 150);
    CHECK(luminance_of(0, 0, 255) == 29);
  }

  TEST_CASE("spatial_smooth") {
    SUBCASE("constant plane") {
      Frame f{20, 10, std::vector<std::uint8_t>(200, 77)};
      auto p = spatial_smooth(f, 7);
      for (double v : p.values) CHECK(v == 77.0);
    }
    SUBCASE("window 1 is identity") {
      Rng rng(1);
      auto f = random_frame(rng, 9, 5, 0);
      auto p = spatial_smooth(f, 1);
      for (std::size_t i = 0; i < f.luma.size(); ++i) CHECK(p.values[i] == f.luma[i]);
    }
    SUBCASE("single bright pixel") {
      Frame f{100, 100, std::vector<std::uint8_t>(10000, 0)};
      f.luma[50 * 100 + 50] = 255;
      auto p = spatial_smooth(f, 50);
      CHECK(p.at(50, 50) == doctest::Approx(255.0 / 2500).epsilon(1e-15));
      CHECK(p.at(50, 50) == doctest::Approx(0.102));
    }
    SUBCASE("border windows are truncated") {
      Rng rng(2);
      auto f = random_frame(rng, 12, 8, 0);
      auto p = spatial_smooth(f, 6);
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 12; ++x) {
          auto [s, n] = naive_window(f, x, y, 6);
          CHECK(p.at(x, y) == static_cast<double>(s) / n);
        }
    }
    SUBCASE("window validation") {
      Frame f{10, 10, std::vector<std::uint8_t>(100, 0)};
      CHECK(test::error_kind_of([&] { spatial_smooth(f, 11); }) == ErrorKind::BadRequest);
      CHECK(test::error_kind_of([&] { spatial_smooth(f, 0); }) == ErrorKind::BadRequest);
    }
  }

  TEST_CASE("motion_signal matches the direct double loop") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const int w = 1 + static_cast<int>(rng.below(24)), h = 1 + static_cast<int>(rng.below(24));
      const int window = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(w, h))));
      std::vector<Frame> frames;
      const int n = 2 + static_cast<int>(rng.below(5));
      for (int i = 0; i < n; ++i) frames.push_back(random_frame(rng, w, h, i / 30.0));
      auto s = motion_signal(frames, window);
      CHECK(s.values == naive_motion(frames, window));
      auto approx = float_motion(frames, window);
      for (std::size_t i = 0; i < approx.size(); ++i) CHECK(s.values[i] == doctest::Approx(approx[i]).epsilon(1e-12));
      CHECK(s.sample_rate == doctest::Approx(30.0));
    }
  }

  TEST_CASE("motion_signal basics") {
    Frame a{16, 16, std::vector<std::uint8_t>(256, 40), 0.0};
    Frame b = a;
    b.timestamp = 1 / 30.0;
    CHECK(motion_signal(std::vector{a, b}, 5).values == std::vector<double>{0.0});

    Frame c = a;
    for (auto& p : c.luma) p += 9;
    c.timestamp = 1 / 30.0;
    CHECK(motion_signal(std::vector{a, c}, 5).values == std::vector<double>{9.0});

    Frame odd{8, 8, std::vector<std::uint8_t>(64), 1.0};
    CHECK(test::error_kind_of([&] { motion_signal(std::vector{a, odd}, 5); }) == ErrorKind::BadRequest);
    CHECK(test::error_kind_of([&] { motion_signal(std::vector{a}, 5); }) == ErrorKind::BadRequest);
  }

  TEST_CASE("motion_signal ignores a constant brightness offset") {
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<Frame> frames, shifted;
      const auto offset = static_cast<std::uint8_t>(rng.below(100));
      for (int i = 0; i < 4; ++i) {
        auto f = random_frame(rng, 16, 12, i / 30.0);
        for (auto& p : f.luma) p = static_cast<std::uint8_t>(p % 150);
        auto g = f;
        for (auto& p : g.luma) p = static_cast<std::uint8_t>(p + offset);
        frames.push_back(f);
        shifted.push_back(g);
      }
      CHECK(motion_signal(frames, 5).values == motion_signal(shifted, 5).values);
    }
  }

  TEST_CASE("builder equals batch") {
    Rng rng(5);
    std::vector<Frame> frames;
    MotionSignalBuilder b(4);
    for (int i = 0; i < 6; ++i) {
      frames.push_back(random_frame(rng, 10, 10, i * 0.04));
      b.push(frames.back());
    }
    auto s = b.finish();
    CHECK(s.values == motion_signal(frames, 4).values);
    CHECK(s.sample_rate == doctest::Approx(25.0));
    CHECK(b.frame_count() == 6);
  }

  TEST_CASE("hampel") {
    MotionSignal flat{std::vector<double>(20, 2.5), 30};
    CHECK(remove_outliers(flat).values == flat.values);

    MotionSignal spike{std::vector<double>(21, 1.0), 30};
    spike.values[10] = 50.0;
    auto out = remove_outliers(spike);
    CHECK(out.values == std::vector<double>(21, 1.0));

    // Window [0, 1, 2, 3, 100, 5, 6, 7, 8] around index 4: median 5,
    // deviations sorted 1..5, 95 -> MAD 3; |100 - 5| > 3 * 1.4826 * 3.
    MotionSignal ramp{{0, 1, 2, 3, 100, 5, 6, 7, 8}, 30};
    auto r = remove_outliers(ramp, 4, 3.0);
    CHECK(r.values[4] == 5.0);
    for (int i : {0, 1, 2, 3, 5, 6, 7, 8}) CHECK(r.values[static_cast<std::size_t>(i)] == ramp.values[static_cast<std::size_t>(i)]);

    MotionSignal tiny{{1.0, 7.0}, 30};
    CHECK(remove_outliers(tiny).values.size() == 2);
  }

  TEST_CASE("butterworth section matches the analog prototype") {
    const double fs = 30.0, fc = 0.5;
    auto f = butterworth_lowpass(fc, fs);
    for (double freq : {0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 14.0}) {
      const auto z = std::polar(1.0, -2 * std::numbers::pi * freq / fs);
      const auto h = (f.b0 + f.b1 * z + f.b2 * z * z) / (1.0 + f.a1 * z + f.a2 * z * z);
      CHECK(std::norm(h) == doctest::Approx(butterworth_power(freq, fc, fs)).epsilon(1e-9));
    }
    CHECK(test::error_kind_of([] { butterworth_lowpass(15.0, 30.0); }) == ErrorKind::BadRequest);
  }

  TEST_CASE("zero-phase lowpass gain follows the squared response") {
    const double fs = 30.0;
    for (double freq : {0.1, 0.5, 1.0, 5.0}) {
      auto y = lowpass(sine(freq, fs, 9000), 0.5);
      CHECK(tone_amplitude(y.values, freq, fs) ==
            doctest::Approx(butterworth_power(freq, 0.5, fs)).epsilon(1e-6).scale(1e-3));
    }
    CHECK(tone_amplitude(lowpass(sine(5.0, fs, 9000)).values, 5.0, fs) < 0.01);
    CHECK(tone_amplitude(lowpass(sine(0.1, fs, 9000)).values, 0.1, fs) >= 0.95);
  }

  TEST_CASE("lowpass keeps constants and phase") {
    MotionSignal c{std::vector<double>(200, 3.25), 30};
    for (double v : lowpass(c).values) CHECK(v == doctest::Approx(3.25).epsilon(1e-12));

    // A symmetric bump stays centred.
    MotionSignal bump{std::vector<double>(301, 0.0), 30};
    for (int i = 0; i < 301; ++i) bump.values[static_cast<std::size_t>(i)] = std::exp(-std::pow((i - 150) / 20.0, 2));
    auto y = lowpass(bump).values;
    CHECK(std::max_element(y.begin(), y.end()) - y.begin() == 150);
  }

  TEST_CASE("percentile") {
    std::vector<double> v{4, 1, 3, 2, 5};
    CHECK(percentile(v, 0) == 1);
    CHECK(percentile(v, 100) == 5);
    CHECK(percentile(v, 50) == 3);
    CHECK(percentile(v, 90) == doctest::Approx(4.6));
  }

  TEST_CASE("detect_stops examples") {
    MotionSignal rising{{}, 30};
    for (int i = 0; i < 50; ++i) rising.values.push_back(i);
    CHECK(detect_stops(rising).frames.empty());

    MotionSignal two{std::vector<double>(60, 1.0), 30};
    two.values[20] = 0.01;
    two.values[26] = 0.05;
    CHECK(detect_stops(two).frames == std::vector<int>{20});
    two.values[20] = 0.05;
    two.values[26] = 0.01;
    CHECK(detect_stops(two).frames == std::vector<int>{26});

    MotionSignal apart{std::vector<double>(60, 1.0), 30};
    apart.values[10] = 0.1;
    apart.values[40] = 0.2;
    CHECK(detect_stops(apart).frames == std::vector<int>{10, 40});

    MotionSignal plateau{std::vector<double>(30, 1.0), 30};
    for (int i = 12; i < 16; ++i) plateau.values[static_cast<std::size_t>(i)] = 0.0;
    CHECK(detect_stops(plateau).frames == std::vector<int>{12});

    MotionSignal shallow{std::vector<double>(30, 1.0), 30};
    shallow.values[15] = 0.5;
    CHECK(detect_stops(shallow).frames.empty());

    MotionSignal edge{{0.0, 1.0, 1.0, 1.0, 0.0}, 30};
    CHECK(detect_stops(edge).frames.empty());
  }

  TEST_CASE("detect_stops is scale invariant") {
    Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
      MotionSignal s{{}, 30};
      const auto n = 3 + rng.below(200);
      for (std::uint64_t i = 0; i < n; ++i) s.values.push_back(rng.uniform());
      const auto base = detect_stops(s);
      for (double k : {0.5, 3.0, 1024.0}) {
        MotionSignal t = s;
        for (auto& v : t.values) v *= k;
        CHECK(detect_stops(t) == base);
      }
      for (std::size_t i = 1; i < base.frames.size(); ++i) {
        CHECK(base.frames[i] > base.frames[i - 1]);
        CHECK(base.frames[i] - base.frames[i - 1] >= 15);
      }
    }
  }

  TEST_CASE("slice_segments") {
    auto s = slice_segments({{10, 20}}, 30);
    REQUIRE(s.size() == 3);
    CHECK((s[0].start == 0 && s[0].end == 10));
    CHECK((s[1].start == 10 && s[1].end == 20));
    CHECK((s[2].start == 20 && s[2].end == 30));
    for (const auto& seg : s) CHECK(seg.active());

    auto none = slice_segments({}, 30);
    REQUIRE(none.size() == 1);
    CHECK((none[0].start == 0 && none[0].end == 30));

    auto lead = slice_segments({{0, 12}}, 30);
    REQUIRE(lead.size() == 2);
    CHECK((lead[0].start == 0 && lead[0].end == 12));

    CHECK(test::error_kind_of([] { slice_segments({{30}}, 30); }) == ErrorKind::BadRequest);
  }

  TEST_CASE("slice_segments tiles the frame range") {
    Rng rng(8);
    for (int trial = 0; trial < 500; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(300));
      StopTimings st;
      for (int f = 0; f < n; ++f)
        if (rng.below(20) == 0) st.frames.push_back(f);
      auto segs = slice_segments(st, n);
      int cursor = 0;
      for (const auto& s : segs) {
        CHECK(s.start == cursor);
        CHECK(s.end > s.start);
        cursor = s.end;
      }
      CHECK(cursor == n);
    }
  }

  TEST_CASE("slice_audio") {
    auto a = slice_audio(96000, 48000, {{30}}, 30);
    REQUIRE(a.size() == 2);
    CHECK(a[0] == SampleRange{0, 48000});
    CHECK(a[1] == SampleRange{48000, 96000});

    CHECK(slice_audio(1000, 48000, {}, 30) == std::vector<SampleRange>{{0, 1000}});
    CHECK(frame_to_sample(15, 44100, 30) == 22050);
    CHECK(slice_audio(44100, 44100, {{15}}, 30)[0].end == 22050);

    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      const auto samples = static_cast<std::int64_t>(rng.below(200000));
      StopTimings st;
      for (int f = 0; f < 200; f += 1 + static_cast<int>(rng.below(40))) st.frames.push_back(f);
      auto ranges = slice_audio(samples, 48000, st, 30);
      std::int64_t cursor = 0;
      for (const auto& r : ranges) {
        CHECK(r.begin == cursor);
        CHECK(r.end > r.begin);
        cursor = r.end;
      }
      CHECK(cursor == samples);
    }
  }

  TEST_CASE("signal csv round trip") {
    Rng rng(10);
    MotionSignal s{{}, 30};
    for (int i = 0; i < 50; ++i) s.values.push_back(rng.uniform() * 1e3);
    auto back = parse_signal_csv(signal_csv(s), 30);
    CHECK(back.values == s.values);
    CHECK(parse_signal_csv("# note\n\n1\n2.5\n", 30).values == std::vector<double>{1, 2.5});
    CHECK(test::error_kind_of([] { parse_signal_csv("1\n-2\n", 30); }) == ErrorKind::BadRequest);
  }

  TEST_CASE("diagnostics csv flags stops") {
    MotionSignal two{std::vector<double>(60, 1.0), 30};
    two.values[20] = 0.0;
    two.values[40] = 0.0;
    Config c;
    c.hampel_half_window = 0;
    auto d = run_chain(two, c);
    auto csv = diagnostics_csv(d);
    CHECK(csv.starts_with("frame_index,raw,deoutliered,filtered,is_stop\n"));
    int flagged = 0;
    for (std::size_t pos = 0; (pos = csv.find(",1\n", pos)) != std::string::npos; ++pos) ++flagged;
    CHECK(flagged == static_cast<int>(d.stops.frames.size()));
  }

  TEST_CASE("six scripted pauses are recovered") {
    synthgen::Script script;
    for (int i = 0; i < 6; ++i) {
      script.push_back({synthgen::Motion::Move, 1.5});
      script.push_back({synthgen::Motion::Pause, 1.2 + 0.1 * (i % 3)});
    }
    script.push_back({synthgen::Motion::Move, 1.5});
    auto video = synthgen::gen_stopgo(script, {.seed = 21});
    auto d = run_chain(motion_signal(video.frames));
    REQUIRE(d.stops.frames.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(d.stops.frames[i] - video.truth[i]) <= 2);
  }
}
