// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include "ites/http_api.hpp"

#include <httplib.h>

#include <json.hpp>
#include <random>

#include "ites/text.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace ites::http {
namespace {

using httplib::Request;
using httplib::Response;
using session::Session;

json error_body(const Error& e) {
  json detail = json::object();
  for (const auto& [k, v] : e.detail()) detail[k] = v;
  return {{"code", code_for(e.kind())}, {"message", e.what()}, {"detail", detail}};
}

void send_json(Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(Response& res, const Error& e) { send_json(res, status_for(e.kind()), error_body(e)); }

json failures_json(const std::vector<compiler::FailureItem>& failures) {
  json out = json::array();
  for (const auto& f : failures) {
    out.push_back({{"segment", f.segment ? json(*f.segment) : json(nullptr)},
                   {"step", f.step ? json(*f.step) : json(nullptr)},
                   {"stage", f.stage},
                   {"rule", f.rule},
                   {"message", f.message}});
  }
  return out;
}

json session_json(const std::string& id, const Session& s) {
  json segs = json::array();
  for (std::size_t i = 0; i < s.segments().size(); ++i) {
    const auto& seg = s.segments()[i];
    segs.push_back({
        {"index", i},
        {"start", seg.segment.start},
        {"end", seg.segment.end},
        {"status", seg.segment.active() ? "active" : "ignored"},
        {"transcript", seg.segment.transcript ? json(*seg.segment.transcript) : json(nullptr)},
        {"transcription_error", seg.transcription_error ? json(*seg.transcription_error) : json(nullptr)},
        {"audio", seg.audio ? json{{"begin", seg.audio->begin}, {"end", seg.audio->end}} : json(nullptr)},
        {"thumbnail", "/sessions/" + id + "/segments/" + std::to_string(i) + "/thumbnail"},
    });
  }
  const auto& b = s.bundle();
  return {
      {"id", id},
      {"phase", std::string(session::to_string(s.phase()))},
      {"bundle",
       {{"id", b.manifest.id},
        {"frames", b.frame_count()},
        {"video_rate", b.manifest.video_rate},
        {"audio_rate", b.manifest.audio_rate}}},
      {"stops", s.diagnostics().stops.frames},
      {"segments", segs},
      {"failures", failures_json(s.failures())},
      {"warnings", s.warnings()},
      {"has_taskmodel", s.model().has_value()},
  };
}

json parse_body(const Request& req) {
  json body;
  try {
    body = json::parse(req.body.empty() ? std::string("{}") : req.body);
  } catch (const json::exception&) {
    throw bad_request("malformed body: expected a JSON object");
  }
  if (!body.is_object()) throw bad_request("malformed body: expected a JSON object");
  return body;
}

int int_field(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end() || !it->is_number_integer())
    throw bad_request(std::string("field '") + name + "' must be an integer", {{"field", name}});
  return it->get<int>();
}

std::string string_field(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end() || !it->is_string())
    throw bad_request(std::string("field '") + name + "' must be a string", {{"field", name}});
  return it->get<std::string>();
}

int index_param(const Request& req) {
  const auto& s = req.path_params.at("index");
  auto v = text::to_long(s);
  if (!v || s.empty() || s.front() == '+') throw bad_request("segment index must be an integer", {{"segment", s}});
  return static_cast<int>(*v);
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const Request& req, Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      send_json(res, 500, {{"code", "internal"}, {"message", e.what()}, {"detail", json::object()}});
    }
  };
}

// Stores a multipart upload as a bundle directory. Part filenames are the
// paths relative to the bundle root.
fs::path store_upload(const Request& req, const fs::path& data_dir) {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::uint64_t token;
  {
    std::lock_guard g(m);
    token = rng();
  }
  const fs::path dir = data_dir / "uploads" / std::to_string(token);
  bool any = false;
  for (const auto& [name, part] : req.files) {
    const std::string rel = part.filename.empty() ? name : part.filename;
    const fs::path p = fs::path(rel).lexically_normal();
    if (rel.empty() || p.is_absolute() || (!p.empty() && *p.begin() == ".."))
      throw bad_request("invalid upload path '" + rel + "'", {{"field", "files"}});
    fs::create_directories((dir / p).parent_path());
    text::write_file(dir / p, part.content);
    any = true;
  }
  if (!any) throw bad_request("upload has no files", {{"field", "files"}});
  return dir;
}

}  // namespace

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadRequest: return 400;
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict: return 409;
    case ErrorKind::FailedDependency: return 424;
  }
  return 500;
}

const char* code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadRequest: return "bad_request";
    case ErrorKind::NotFound: return "not_found";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::FailedDependency: return "failed_dependency";
  }
  return "internal";
}

Service::Service(session::SessionStore& store) : store_(store), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool Service::listen_after_bind() { return server_->listen_after_bind(); }
void Service::stop() { server_->stop(); }
bool Service::is_running() const { return server_->is_running(); }
void Service::wait_until_ready() const { server_->wait_until_ready(); }

void Service::install_routes() {
  auto& srv = *server_;
  auto& store = store_;

  srv.set_error_handler([](const Request&, Response& res) {
    if (!res.body.empty()) return;
    const bool not_found = res.status == 404;
    send_json(res, res.status,
              {{"code", not_found ? "not_found" : "bad_request"},
               {"message", not_found ? "no such route" : "request rejected"},
               {"detail", json::object()}});
  });

  srv.Get("/sessions", guarded([&store](const Request&, Response& res) {
            send_json(res, 200, {{"sessions", store.list()}});
          }));

  srv.Post("/sessions", guarded([&store](const Request& req, Response& res) {
             fs::path bundle_dir;
             if (req.is_multipart_form_data()) {
               bundle_dir = store_upload(req, store.data_dir());
             } else {
               const json body = parse_body(req);
               bundle_dir = string_field(body, "bundle");
             }
             const auto id = store.create(bundle_dir);
             const json view = store.read(id, [&](const Session& s) { return session_json(id, s); });
             res.set_header("Location", "/sessions/" + id);
             send_json(res, 201, view);
           }));

  srv.Get("/sessions/:id", guarded([&store](const Request& req, Response& res) {
            const auto& id = req.path_params.at("id");
            send_json(res, 200, store.read(id, [&](const Session& s) { return session_json(id, s); }));
          }));

  srv.Delete("/sessions/:id", guarded([&store](const Request& req, Response& res) {
               store.discard(req.path_params.at("id"));
               res.status = 204;
             }));

  // Mutations share one shape: parse, edit under the write lock, return the
  // new session view.
  auto mutate = [&srv, &store](const std::string& pattern, bool put, auto edit) {
    auto handler = guarded([&store, edit](const Request& req, Response& res) {
      const auto& id = req.path_params.at("id");
      const json body = parse_body(req);
      const json view = store.write(id, [&](Session& s) {
        edit(req, body, s);
        return session_json(id, s);
      });
      send_json(res, 200, view);
    });
    if (put)
      srv.Put(pattern, handler);
    else
      srv.Post(pattern, handler);
  };

  mutate("/sessions/:id/segments/merge", false, [](const Request&, const json& body, Session& s) {
    s.merge(int_field(body, "first"), int_field(body, "second"));
  });
  mutate("/sessions/:id/segments/:index/ignore", false,
         [](const Request& req, const json&, Session& s) { s.ignore(index_param(req)); });
  mutate("/sessions/:id/segments/confirm", false, [&store](const Request&, const json&, Session& s) {
    auto backend = store.backend_for(s.bundle_ptr());
    s.confirm_segments(*backend);
  });
  mutate("/sessions/:id/segments/:index/transcript", true, [](const Request& req, const json& body, Session& s) {
    s.set_transcript(index_param(req), string_field(body, "text"));
  });
  mutate("/sessions/:id/transcripts/confirm", false,
         [](const Request&, const json&, Session& s) { s.confirm_transcripts(); });
  mutate("/sessions/:id/transcripts/reopen", false,
         [](const Request&, const json&, Session& s) { s.reopen_transcripts(); });
  mutate("/sessions/:id/revert", false, [](const Request&, const json&, Session& s) { s.revert(); });

  srv.Post("/sessions/:id/compile", guarded([&store](const Request& req, Response& res) {
             const auto& id = req.path_params.at("id");
             store.write(id, [&](Session& s) {
               try {
                 const auto& model = s.compile();
                 json steps = json::array();
                 for (const auto& st : model.steps)
                   steps.push_back({{"label", std::string(taskmodel::code(st.label))},
                                    {"name", std::string(taskmodel::display_name(st.label))},
                                    {"segment", st.source_segment},
                                    {"transcript", st.transcript}});
                 send_json(res, 200,
                           {{"phase", std::string(session::to_string(s.phase()))},
                            {"taskmodel", taskmodel::serialize(model)},
                            {"steps", steps},
                            {"warnings", s.warnings()}});
               } catch (const Error& e) {
                 json body = error_body(e);
                 body["violations"] = failures_json(s.failures());
                 body["phase"] = std::string(session::to_string(s.phase()));
                 send_json(res, status_for(e.kind()), body);
               }
             });
           }));

  srv.Get("/sessions/:id/taskmodel", guarded([&store](const Request& req, Response& res) {
            const auto text = store.read(req.path_params.at("id"), [](const Session& s) {
              if (!s.model()) throw conflict("no task model", {{"phase", std::string(session::to_string(s.phase()))}});
              return taskmodel::serialize(*s.model());
            });
            res.set_content(text, "text/plain; charset=utf-8");
          }));

  srv.Get("/sessions/:id/signal", guarded([&store](const Request& req, Response& res) {
            const auto csv = store.read(req.path_params.at("id"),
                                        [](const Session& s) { return segmentation::diagnostics_csv(s.diagnostics()); });
            res.set_content(csv, "text/csv; charset=utf-8");
          }));

  srv.Get("/sessions/:id/audit", guarded([&store](const Request& req, Response& res) {
            const auto log = store.read(req.path_params.at("id"), [](const Session& s) { return s.audit_log(); });
            res.set_content(log, "text/plain; charset=utf-8");
          }));

  srv.Get("/sessions/:id/segments/:index/thumbnail", guarded([&store](const Request& req, Response& res) {
            const auto& id = req.path_params.at("id");
            const int index = index_param(req);
            const auto bytes = store.read(id, [&](const Session& s) {
              if (index < 0 || static_cast<std::size_t>(index) >= s.segments().size())
                throw bad_request("segment index out of range", {{"segment", std::to_string(index)}});
              const int frame = s.segments()[static_cast<std::size_t>(index)].segment.start;
              const auto path = session::thumbnail_path(store.data_dir() / id, frame);
              if (!fs::is_regular_file(path)) throw not_found("thumbnail not found", {{"segment", std::to_string(index)}});
              return text::read_file(path);
            });
            res.set_content(bytes, "image/x-portable-graymap");
          }));
}

}  // namespace ites::http
