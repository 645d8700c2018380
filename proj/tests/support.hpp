// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <unistd.h>

#include "ites/error.hpp"
#include "ites/session.hpp"
#include "ites/synthgen.hpp"

namespace ites::test {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("ites-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

/// Clock yielding a fixed timestamp, so audit logs compare byte for byte.
inline std::string fixed_clock() { return "2026-01-01T00:00:00.000Z"; }

/// Scenario bundles are generated once per process and shared read-only.
struct ScenarioFixture {
  fs::path dir;
  synthgen::ScenarioTruth truth;
};

inline const ScenarioFixture& scenario(synthgen::Scenario s) {
  static TempDir root("scenarios");
  static std::mutex m;
  static std::map<synthgen::Scenario, ScenarioFixture> cache;
  std::lock_guard g(m);
  auto it = cache.find(s);
  if (it == cache.end()) {
    ScenarioFixture f;
    f.dir = root.path() / std::string(synthgen::to_string(s));
    f.truth = synthgen::gen_scenario(s, f.dir);
    it = cache.emplace(s, std::move(f)).first;
  }
  return it->second;
}

template <class F>
ErrorKind error_kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  throw std::logic_error("expected an ites::Error");
}

template <class F>
std::string error_message_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  throw std::logic_error("expected an ites::Error");
}

inline double dist(const Vec3& a, const Vec3& b) { return norm(a - b); }

}  // namespace ites::test
