// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "ites/error.hpp"
#include "ites/session.hpp"

namespace httplib {
class Server;
}

namespace ites::http {

/// HTTP status for each error kind: 400, 404, 409, 424.
int status_for(ErrorKind kind);
/// Wire name: bad_request, not_found, conflict, failed_dependency.
const char* code_for(ErrorKind kind);

/// REST front end over a SessionStore. Routes and JSON field names are
/// documented in docs/api.md. Holds no state besides the store.
class Service {
 public:
  explicit Service(session::SessionStore& store);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds to an ephemeral port when port == 0; returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen_after_bind();
  void stop();
  bool is_running() const;
  void wait_until_ready() const;

  httplib::Server& server() { return *server_; }

 private:
  void install_routes();

  session::SessionStore& store_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace ites::http
