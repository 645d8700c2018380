// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "ites/bundle.hpp"
#include "ites/compiler.hpp"
#include "ites/error.hpp"
#include "ites/segmentation.hpp"
#include "ites/taskmodel.hpp"
#include "ites/transcription.hpp"

namespace ites::session {

enum class Phase { Created, Segmented, SegmentsConfirmed, Transcribed, TranscriptsConfirmed, Compiled, Failed };

std::string_view to_string(Phase phase);
std::optional<Phase> phase_from(std::string_view name);

/// One line of the audit log: `timestamp<TAB>op<TAB>args`. Args are
/// space-separated integers or quoted strings.
struct Record {
  std::string timestamp;
  std::string op;
  std::vector<std::string> args;  // decoded values
  friend bool operator==(const Record&, const Record&) = default;
};

std::string format_record(const Record& r);
/// Throws Error(BadRequest) on malformed lines.
Record parse_record(std::string_view line);
std::vector<Record> parse_audit_log(std::string_view text);

struct SessionSegment {
  segmentation::Segment segment;
  std::optional<segmentation::SampleRange> audio;  // set once segments are confirmed
  std::optional<std::string> transcription_error;  // backend failure, transcript left empty
  friend bool operator==(const SessionSegment&, const SessionSegment&) = default;
};

using Clock = std::function<std::string()>;
/// UTC ISO-8601 with milliseconds.
std::string wall_clock();

inline constexpr std::string_view kAuditLog = "audit.log";
inline constexpr std::string_view kManifestCopy = "manifest.txt";
inline constexpr std::string_view kTaskModelFile = "taskmodel.txt";
inline constexpr std::string_view kSignalFile = "signal.csv";
inline constexpr std::string_view kStateFile = "state.txt";
inline constexpr std::string_view kThumbnailDir = "thumbnails";

/// Thumbnail of one frame, written at segmentation time for every segment
/// start: `thumbnails/<frame>.pgm`, subsampled to at most 160 px wide.
std::filesystem::path thumbnail_path(const std::filesystem::path& session_dir, int frame);
segmentation::Frame make_thumbnail(const segmentation::Frame& frame, int max_width = 160);

/// Review state machine for one demonstration. Every mutation is an audit
/// record; the record sequence fully determines the state, so a session is
/// persisted as its log and restored by replay.
///
/// Not thread-safe; SessionStore serializes access.
class Session {
 public:
  /// In-memory session over a bundle directory (no persistence).
  static std::unique_ptr<Session> create(const std::filesystem::path& bundle_dir, Clock clock = wall_clock);
  /// New persistent session in `dir`, which must not contain an audit log.
  static std::unique_ptr<Session> create_in(const std::filesystem::path& dir, const std::filesystem::path& bundle_dir,
                                            Clock clock = wall_clock);
  /// Restores a persistent session by replaying its audit log. Throws
  /// Error(NotFound) if the directory has no log.
  static std::unique_ptr<Session> open(const std::filesystem::path& dir, Clock clock = wall_clock);
  /// Replays a log into a fresh in-memory session.
  static std::unique_ptr<Session> replay(std::string_view audit_log, Clock clock = wall_clock);

  // Edits. Each throws Error(Conflict, "wrong phase") outside its phase and
  // Error(BadRequest) for out-of-range indices.
  void merge(int first, int second);
  void ignore(int index);
  void confirm_segments(transcription::TranscriptionBackend& backend);
  void set_transcript(int index, std::string text);
  void confirm_transcripts();
  /// On failure the session moves to Failed and the error is rethrown:
  /// Conflict for grammar violations and segments without recognizable
  /// content, FailedDependency for daemon errors.
  const taskmodel::TaskModel& compile();
  /// Failed -> TranscriptsConfirmed.
  void revert();
  /// TranscriptsConfirmed -> Transcribed, reopening transcript edits.
  void reopen_transcripts();

  Phase phase() const { return phase_; }
  const std::vector<SessionSegment>& segments() const { return segments_; }
  const bundle::DemoBundle& bundle() const { return *bundle_; }
  std::shared_ptr<const bundle::DemoBundle> bundle_ptr() const { return bundle_; }
  const segmentation::Diagnostics& diagnostics() const { return diagnostics_; }
  const std::optional<taskmodel::TaskModel>& model() const { return model_; }
  const std::vector<compiler::FailureItem>& failures() const { return failures_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::vector<Record>& records() const { return records_; }
  std::string audit_log() const;
  const std::optional<std::filesystem::path>& dir() const { return dir_; }

  /// Canonical dump of everything replay must reproduce (timestamps excluded).
  std::string state_text() const;

 private:
  explicit Session(Clock clock) : clock_(std::move(clock)) {}

  void apply(const Record& r);
  void record(std::string op, std::vector<std::string> args);
  void persist_outputs() const;
  void require_phase(Phase expected, std::string_view op) const;
  SessionSegment& segment_at(int index, std::string_view op);
  void run_compile();

  Clock clock_;
  std::optional<std::filesystem::path> dir_;
  std::shared_ptr<const bundle::DemoBundle> bundle_;
  segmentation::Diagnostics diagnostics_;
  Phase phase_ = Phase::Created;
  std::vector<SessionSegment> segments_;
  std::optional<taskmodel::TaskModel> model_;
  std::vector<compiler::FailureItem> failures_;
  std::vector<std::string> warnings_;
  std::vector<Record> records_;
  bool replaying_ = false;
};

/// Scripted backend over the bundle's transcript script; a backend that
/// always fails when the bundle has no script.
std::unique_ptr<transcription::TranscriptionBackend> default_backend(const bundle::DemoBundle& b);

/// A user edit in audit-argument encoding without the timestamp, e.g.
/// `merge 3 4` or `set_transcript 1 "Grasp the box"`.
Record parse_edit(std::string_view line);

/// Dispatches an edit to the matching Session method. Ops: merge, ignore,
/// confirm_segments, set_transcript, confirm_transcripts, compile, revert,
/// reopen_transcripts.
void apply_edit(Session& session, const Record& edit, transcription::TranscriptionBackend& backend);

/// Error for a failed compile, built from the failure list.
Error compile_error(const std::vector<compiler::FailureItem>& failures);

/// Persistent sessions under one data directory, one subdirectory each.
/// Sessions are opened lazily from disk, so a restarted store sees every
/// session a previous process created. Edits to one session are serialized;
/// reads share the lock.
class SessionStore {
 public:
  using BackendFactory =
      std::function<std::unique_ptr<transcription::TranscriptionBackend>(std::shared_ptr<const bundle::DemoBundle>)>;

  explicit SessionStore(std::filesystem::path data_dir, Clock clock = wall_clock);

  /// Scripted backend over the bundle's transcript script by default.
  void set_backend_factory(BackendFactory f) { backend_factory_ = std::move(f); }

  std::string create(const std::filesystem::path& bundle_dir);
  void discard(const std::string& id);
  std::vector<std::string> list() const;

  /// Runs `fn` with shared access to the session.
  template <class Fn>
  auto read(const std::string& id, Fn&& fn) {
    auto e = entry(id);
    std::shared_lock lock(e->mutex);
    return fn(static_cast<const Session&>(*e->session));
  }

  /// Runs `fn` with exclusive access to the session.
  template <class Fn>
  auto write(const std::string& id, Fn&& fn) {
    auto e = entry(id);
    std::unique_lock lock(e->mutex);
    return fn(*e->session);
  }

  std::unique_ptr<transcription::TranscriptionBackend> backend_for(std::shared_ptr<const bundle::DemoBundle> b) const;
  const std::filesystem::path& data_dir() const { return data_dir_; }

 private:
  struct Entry {
    std::shared_mutex mutex;
    std::unique_ptr<Session> session;
  };
  std::shared_ptr<Entry> entry(const std::string& id);

  std::filesystem::path data_dir_;
  Clock clock_;
  BackendFactory backend_factory_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
};

/// Session ids are 16 lowercase hex digits.
bool valid_session_id(std::string_view id);

}  // namespace ites::session
