// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include "ites/session.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <random>

#include "ites/error.hpp"
#include "ites/pnm.hpp"
#include "ites/text.hpp"

namespace fs = std::filesystem;

namespace ites::session {
namespace {

constexpr std::array<std::string_view, 7> kPhaseNames{
    "Created", "Segmented", "SegmentsConfirmed", "Transcribed", "TranscriptsConfirmed", "Compiled", "Failed"};

bool is_integer(std::string_view s) {
  if (!s.empty() && s.front() == '-') s.remove_prefix(1);
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int int_arg(const Record& r, std::size_t i) {
  if (i >= r.args.size()) throw bad_request(r.op + ": missing argument " + std::to_string(i + 1));
  auto v = text::to_long(r.args[i]);
  if (!v || !is_integer(r.args[i])) throw bad_request(r.op + ": argument " + std::to_string(i + 1) + " must be an integer");
  return static_cast<int>(*v);
}

const std::string& str_arg(const Record& r, std::size_t i) {
  if (i >= r.args.size()) throw bad_request(r.op + ": missing argument " + std::to_string(i + 1));
  return r.args[i];
}

void expect_args(const Record& r, std::size_t n) {
  if (r.args.size() != n)
    throw bad_request(r.op + ": expected " + std::to_string(n) + " arguments, got " + std::to_string(r.args.size()));
}

// Default backend for bundles without a transcript script.
class UnavailableBackend final : public transcription::TranscriptionBackend {
 public:
  std::string transcribe(const segmentation::SampleRange&) override {
    throw failed_dependency("no transcription backend configured");
  }
};

}  // namespace

std::string_view to_string(Phase phase) { return kPhaseNames[static_cast<std::size_t>(phase)]; }

std::optional<Phase> phase_from(std::string_view name) {
  for (std::size_t i = 0; i < kPhaseNames.size(); ++i)
    if (kPhaseNames[i] == name) return static_cast<Phase>(i);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Audit records

std::string format_record(const Record& r) {
  std::string out = r.timestamp + '\t' + r.op + '\t';
  for (std::size_t i = 0; i < r.args.size(); ++i) {
    if (i) out += ' ';
    out += is_integer(r.args[i]) ? r.args[i] : taskmodel::quote(r.args[i]);
  }
  return out;
}

Record parse_record(std::string_view line) {
  auto fields = text::split(line, '\t');
  if (fields.size() != 3) throw bad_request("audit record must have 3 tab-separated fields");
  Record r{std::string(fields[0]), std::string(fields[1]), {}};
  if (r.op.empty()) throw bad_request("audit record has an empty op");
  std::string_view rest = fields[2];
  std::size_t i = 0;
  while (i < rest.size()) {
    if (rest[i] == ' ') {
      ++i;
      continue;
    }
    if (rest[i] == '"') {
      std::size_t j = i + 1;
      while (j < rest.size() && rest[j] != '"') j += rest[j] == '\\' ? 2 : 1;
      if (j >= rest.size()) throw bad_request("audit record has an unterminated string");
      r.args.push_back(taskmodel::unquote(rest.substr(i, j + 1 - i)));
      i = j + 1;
    } else {
      std::size_t j = rest.find(' ', i);
      if (j == std::string_view::npos) j = rest.size();
      auto tok = rest.substr(i, j - i);
      if (!is_integer(tok)) throw bad_request("audit record argument '" + std::string(tok) + "' is not an integer");
      r.args.emplace_back(tok);
      i = j;
    }
  }
  return r;
}

std::vector<Record> parse_audit_log(std::string_view text) {
  std::vector<Record> out;
  auto lines = text::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    try {
      out.push_back(parse_record(lines[i]));
    } catch (const Error& e) {
      throw bad_request("audit line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::string wall_clock() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

// ---------------------------------------------------------------------------
// Session

std::unique_ptr<Session> Session::create(const fs::path& bundle_dir, Clock clock) {
  std::unique_ptr<Session> s(new Session(std::move(clock)));
  s->record("create", {fs::absolute(bundle_dir).lexically_normal().string()});
  return s;
}

std::unique_ptr<Session> Session::create_in(const fs::path& dir, const fs::path& bundle_dir, Clock clock) {
  if (fs::exists(dir / kAuditLog)) throw conflict("session already exists", {{"path", dir.string()}});
  std::unique_ptr<Session> s(new Session(std::move(clock)));
  // Validate the bundle before touching the filesystem.
  Record r{s->clock_(), "create", {fs::absolute(bundle_dir).lexically_normal().string()}};
  s->apply(r);
  fs::create_directories(dir);
  s->dir_ = dir;
  s->records_.push_back(r);
  text::write_file(dir / kAuditLog, format_record(r) + '\n');
  s->persist_outputs();
  return s;
}

std::unique_ptr<Session> Session::open(const fs::path& dir, Clock clock) {
  const fs::path log = dir / kAuditLog;
  if (!fs::is_regular_file(log)) throw not_found("unknown session", {{"path", dir.string()}});
  auto s = replay(text::read_file(log), std::move(clock));
  s->dir_ = dir;
  s->persist_outputs();
  return s;
}

std::unique_ptr<Session> Session::replay(std::string_view audit_log, Clock clock) {
  std::unique_ptr<Session> s(new Session(std::move(clock)));
  s->replaying_ = true;
  auto records = parse_audit_log(audit_log);
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      s->apply(records[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), "audit record " + std::to_string(i + 1) + " (" + records[i].op + "): " + e.what(),
                  e.detail());
    }
    s->records_.push_back(std::move(records[i]));
  }
  s->replaying_ = false;
  if (s->records_.empty()) throw bad_request("empty audit log");
  return s;
}

void Session::record(std::string op, std::vector<std::string> args) {
  Record r{clock_(), std::move(op), std::move(args)};
  apply(r);
  records_.push_back(r);
  if (dir_) {
    std::ofstream out(*dir_ / kAuditLog, std::ios::app | std::ios::binary);
    out << format_record(r) << '\n';
    out.flush();
    if (!out) throw failed_dependency("cannot append to audit log", {{"path", dir_->string()}});
    persist_outputs();
  }
}

void Session::require_phase(Phase expected, std::string_view op) const {
  if (phase_ != expected)
    throw conflict("wrong phase", {{"phase", std::string(to_string(phase_))},
                                   {"expected", std::string(to_string(expected))},
                                   {"op", std::string(op)}});
}

SessionSegment& Session::segment_at(int index, std::string_view op) {
  if (index < 0 || static_cast<std::size_t>(index) >= segments_.size())
    throw bad_request("segment index out of range", {{"segment", std::to_string(index)}, {"op", std::string(op)}});
  return segments_[static_cast<std::size_t>(index)];
}

void Session::apply(const Record& r) {
  const std::string& op = r.op;
  if (records_.empty() != (op == "create")) {
    if (op == "create") throw conflict("session already created");
    throw bad_request("first audit record must be create");
  }

  if (op == "create") {
    expect_args(r, 1);
    bundle_ = bundle::load(str_arg(r, 0));
    diagnostics_ = segmentation::run_chain(bundle::raw_signal(*bundle_), bundle_->manifest.segmentation);
    segments_.clear();
    for (auto& seg : segmentation::slice_segments(diagnostics_.stops, bundle_->frame_count()))
      segments_.push_back({std::move(seg), std::nullopt, std::nullopt});
    phase_ = Phase::Segmented;
  } else if (op == "merge") {
    expect_args(r, 2);
    require_phase(Phase::Segmented, op);
    const int i = int_arg(r, 0), j = int_arg(r, 1);
    auto& a = segment_at(i, op);
    auto& b = segment_at(j, op);
    if (j != i + 1)
      throw conflict("not adjacent", {{"first", std::to_string(i)}, {"second", std::to_string(j)}});
    if (!a.segment.active() || !b.segment.active())
      throw conflict("segment not active", {{"segment", std::to_string(a.segment.active() ? j : i)}});
    a.segment.end = b.segment.end;
    segments_.erase(segments_.begin() + j);
  } else if (op == "ignore") {
    expect_args(r, 1);
    require_phase(Phase::Segmented, op);
    segment_at(int_arg(r, 0), op).segment.status = segmentation::SegmentStatus::Ignored;
  } else if (op == "confirm_segments") {
    expect_args(r, 0);
    require_phase(Phase::Segmented, op);
    const auto active = std::count_if(segments_.begin(), segments_.end(),
                                      [](const SessionSegment& s) { return s.segment.active(); });
    if (active < 3) throw conflict("too few segments", {{"active", std::to_string(active)}});
    const auto& m = bundle_->manifest;
    const auto total = bundle_->audio_sample_count;
    for (auto& s : segments_) {
      if (!s.segment.active()) continue;
      auto b = std::min(segmentation::frame_to_sample(s.segment.start, m.audio_rate, m.video_rate), total);
      auto e = std::min(segmentation::frame_to_sample(s.segment.end, m.audio_rate, m.video_rate), total);
      s.audio = segmentation::SampleRange{b, e};
    }
    phase_ = Phase::SegmentsConfirmed;
  } else if (op == "transcribed" || op == "transcription_failed") {
    expect_args(r, 2);
    require_phase(Phase::SegmentsConfirmed, op);
    auto& s = segment_at(int_arg(r, 0), op);
    if (!s.segment.active()) throw conflict("segment not active", {{"segment", r.args[0]}});
    if (op == "transcribed") {
      s.segment.transcript = str_arg(r, 1);
      s.transcription_error.reset();
    } else {
      s.segment.transcript = std::string();
      s.transcription_error = str_arg(r, 1);
    }
  } else if (op == "transcription_done") {
    expect_args(r, 0);
    require_phase(Phase::SegmentsConfirmed, op);
    for (auto& s : segments_)
      if (s.segment.active() && !s.segment.transcript) s.segment.transcript = std::string();
    phase_ = Phase::Transcribed;
  } else if (op == "set_transcript") {
    expect_args(r, 2);
    require_phase(Phase::Transcribed, op);
    auto& s = segment_at(int_arg(r, 0), op);
    if (!s.segment.active()) throw conflict("segment not active", {{"segment", r.args[0]}});
    s.segment.transcript = str_arg(r, 1);
    s.transcription_error.reset();
  } else if (op == "confirm_transcripts") {
    expect_args(r, 0);
    require_phase(Phase::Transcribed, op);
    phase_ = Phase::TranscriptsConfirmed;
  } else if (op == "reopen_transcripts") {
    expect_args(r, 0);
    require_phase(Phase::TranscriptsConfirmed, op);
    phase_ = Phase::Transcribed;
  } else if (op == "compile") {
    expect_args(r, 0);
    require_phase(Phase::TranscriptsConfirmed, op);
    run_compile();
  } else if (op == "revert") {
    expect_args(r, 0);
    require_phase(Phase::Failed, op);
    failures_.clear();
    warnings_.clear();
    phase_ = Phase::TranscriptsConfirmed;
  } else {
    throw bad_request("unknown op '" + op + "'");
  }
}

void Session::run_compile() {
  std::vector<compiler::SegmentInput> inputs;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i].segment;
    if (!s.active()) continue;
    inputs.push_back({static_cast<int>(i), s.start, s.end, s.transcript.value_or("")});
  }
  auto result = compiler::compile(*bundle_, inputs);
  warnings_ = std::move(result.warnings);
  failures_ = std::move(result.failures);
  if (result.model) {
    model_ = std::move(result.model);
    phase_ = Phase::Compiled;
  } else {
    model_.reset();
    phase_ = Phase::Failed;
  }
}

void Session::merge(int first, int second) { record("merge", {std::to_string(first), std::to_string(second)}); }

void Session::ignore(int index) { record("ignore", {std::to_string(index)}); }

void Session::confirm_segments(transcription::TranscriptionBackend& backend) {
  record("confirm_segments", {});
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!s.segment.active()) continue;
    std::string text;
    std::string failure;
    try {
      text = backend.transcribe(*s.audio);
    } catch (const std::exception& e) {
      failure = e.what();
      if (failure.empty()) failure = "transcription failed";
    }
    if (failure.empty())
      record("transcribed", {std::to_string(i), text});
    else
      record("transcription_failed", {std::to_string(i), failure});
  }
  record("transcription_done", {});
}

void Session::set_transcript(int index, std::string text) { record("set_transcript", {std::to_string(index), std::move(text)}); }

void Session::confirm_transcripts() { record("confirm_transcripts", {}); }

const taskmodel::TaskModel& Session::compile() {
  record("compile", {});
  if (phase_ == Phase::Failed) throw compile_error(failures_);
  return *model_;
}

void Session::revert() { record("revert", {}); }

void Session::reopen_transcripts() { record("reopen_transcripts", {}); }

std::string Session::audit_log() const {
  std::string out;
  for (const auto& r : records_) out += format_record(r) + '\n';
  return out;
}

std::string Session::state_text() const {
  std::string out;
  out += "phase " + std::string(to_string(phase_)) + '\n';
  if (bundle_) {
    out += "bundle " + taskmodel::quote(bundle_->manifest.id) + '\n';
    out += "frames " + std::to_string(bundle_->frame_count()) + '\n';
  }
  out += "stops";
  for (int f : diagnostics_.stops.frames) out += ' ' + std::to_string(f);
  out += '\n';
  out += "segments " + std::to_string(segments_.size()) + '\n';
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    out += "segment " + std::to_string(i) + ": " + std::to_string(s.segment.start) + ' ' +
           std::to_string(s.segment.end) + (s.segment.active() ? " active" : " ignored");
    if (s.audio) out += " audio=" + std::to_string(s.audio->begin) + ',' + std::to_string(s.audio->end);
    if (s.segment.transcript) out += " transcript=" + taskmodel::quote(*s.segment.transcript);
    if (s.transcription_error) out += " error=" + taskmodel::quote(*s.transcription_error);
    out += '\n';
  }
  for (const auto& f : failures_) {
    out += "failure";
    out += " segment=" + (f.segment ? std::to_string(*f.segment) : std::string("-"));
    out += " stage=" + f.stage + " rule=" + f.rule + " message=" + taskmodel::quote(f.message) + '\n';
  }
  for (const auto& w : warnings_) out += "warning " + taskmodel::quote(w) + '\n';
  if (model_) out += taskmodel::serialize(*model_);
  return out;
}

void Session::persist_outputs() const {
  if (!dir_ || replaying_) return;
  const fs::path& d = *dir_;
  if (bundle_) {
    if (!fs::exists(d / kManifestCopy)) text::write_file(d / kManifestCopy, bundle_->manifest_text);
    if (!fs::exists(d / kSignalFile)) text::write_file(d / kSignalFile, segmentation::diagnostics_csv(diagnostics_));
    if (!fs::exists(d / kThumbnailDir)) {
      fs::create_directories(d / kThumbnailDir);
      for (const auto& s : segments_) {
        const auto& src = bundle_->frame_paths[static_cast<std::size_t>(s.segment.start)];
        pnm::write_pgm(thumbnail_path(d, s.segment.start), make_thumbnail(pnm::read(src)));
      }
    }
  }
  text::write_file(d / kStateFile, state_text());
  if (model_)
    text::write_file(d / kTaskModelFile, taskmodel::serialize(*model_));
  else
    fs::remove(d / kTaskModelFile);
}

std::unique_ptr<transcription::TranscriptionBackend> default_backend(const bundle::DemoBundle& b) {
  if (!b.manifest.transcripts) return std::make_unique<UnavailableBackend>();
  return std::make_unique<transcription::ScriptedTranscription>(b.utterances, b.manifest.audio_rate);
}

Record parse_edit(std::string_view line) {
  line = text::trim(line);
  const auto sp = line.find(' ');
  const auto op = line.substr(0, sp);
  const auto rest = sp == std::string_view::npos ? std::string_view() : line.substr(sp + 1);
  return parse_record("-\t" + std::string(op) + "\t" + std::string(rest));
}

void apply_edit(Session& s, const Record& e, transcription::TranscriptionBackend& backend) {
  auto n = [&](std::size_t want) {
    if (e.args.size() != want)
      throw bad_request(e.op + ": expected " + std::to_string(want) + " arguments", {{"op", e.op}});
  };
  if (e.op == "merge") {
    n(2);
    s.merge(int_arg(e, 0), int_arg(e, 1));
  } else if (e.op == "ignore") {
    n(1);
    s.ignore(int_arg(e, 0));
  } else if (e.op == "confirm_segments") {
    n(0);
    s.confirm_segments(backend);
  } else if (e.op == "set_transcript") {
    n(2);
    s.set_transcript(int_arg(e, 0), e.args[1]);
  } else if (e.op == "confirm_transcripts") {
    n(0);
    s.confirm_transcripts();
  } else if (e.op == "compile") {
    n(0);
    s.compile();
  } else if (e.op == "revert") {
    n(0);
    s.revert();
  } else if (e.op == "reopen_transcripts") {
    n(0);
    s.reopen_transcripts();
  } else {
    throw bad_request("unknown edit '" + e.op + "'", {{"op", e.op}});
  }
}

fs::path thumbnail_path(const fs::path& session_dir, int frame) {
  return session_dir / kThumbnailDir / (std::to_string(frame) + ".pgm");
}

segmentation::Frame make_thumbnail(const segmentation::Frame& frame, int max_width) {
  const int step = std::max(1, (frame.width + max_width - 1) / max_width);
  segmentation::Frame out;
  out.width = (frame.width + step - 1) / step;
  out.height = (frame.height + step - 1) / step;
  out.timestamp = frame.timestamp;
  out.luma.reserve(static_cast<std::size_t>(out.width) * out.height);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.luma.push_back(frame.at(x * step, y * step));
  return out;
}

Error compile_error(const std::vector<compiler::FailureItem>& failures) {
  if (failures.empty()) return conflict("compile failed");
  const auto& f = failures.front();
  Error::Detail d{{"stage", f.stage}, {"rule", f.rule}};
  if (f.segment) d["segment"] = std::to_string(*f.segment);
  const std::string where = f.segment ? "segment " + std::to_string(*f.segment) + ": " : std::string();
  if (f.stage == "gmr") {
    d["violations"] = std::to_string(failures.size());
    return conflict(where + f.message, d);
  }
  if (f.stage == "recognition") return conflict(where + f.message, d);
  d["daemon"] = f.stage;
  return failed_dependency(where + f.stage + ": " + f.message, d);
}

// ---------------------------------------------------------------------------
// Store

bool valid_session_id(std::string_view id) {
  return id.size() == 16 &&
         std::all_of(id.begin(), id.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

SessionStore::SessionStore(fs::path data_dir, Clock clock) : data_dir_(std::move(data_dir)), clock_(std::move(clock)) {
  fs::create_directories(data_dir_);
}

std::unique_ptr<transcription::TranscriptionBackend> SessionStore::backend_for(std::shared_ptr<const bundle::DemoBundle> b) const {
  if (backend_factory_) return backend_factory_(std::move(b));
  return default_backend(*b);
}

std::string SessionStore::create(const fs::path& bundle_dir) {
  static std::mutex rng_mutex;
  static std::mt19937_64 rng{std::random_device{}()};
  std::unique_lock lock(mutex_);
  std::string id;
  do {
    std::uint64_t v;
    {
      std::lock_guard g(rng_mutex);
      v = rng();
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    id = buf;
  } while (entries_.count(id) || fs::exists(data_dir_ / id));
  auto e = std::make_shared<Entry>();
  e->session = Session::create_in(data_dir_ / id, bundle_dir, clock_);
  entries_.emplace(id, std::move(e));
  return id;
}

std::shared_ptr<SessionStore::Entry> SessionStore::entry(const std::string& id) {
  if (!valid_session_id(id)) throw not_found("unknown session", {{"session", id}});
  {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(id);
    if (it != entries_.end()) return it->second;
  }
  std::unique_lock lock(mutex_);
  auto it = entries_.find(id);
  if (it != entries_.end()) return it->second;
  if (!fs::is_regular_file(data_dir_ / id / kAuditLog)) throw not_found("unknown session", {{"session", id}});
  auto e = std::make_shared<Entry>();
  e->session = Session::open(data_dir_ / id, clock_);
  entries_.emplace(id, e);
  return e;
}

void SessionStore::discard(const std::string& id) {
  auto e = entry(id);
  std::unique_lock lock(mutex_);
  std::unique_lock elock(e->mutex);
  fs::remove_all(data_dir_ / id);
  entries_.erase(id);
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> out;
  for (const auto& de : fs::directory_iterator(data_dir_)) {
    const auto name = de.path().filename().string();
    if (valid_session_id(name) && fs::is_regular_file(de.path() / kAuditLog)) out.push_back(name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ites::session
