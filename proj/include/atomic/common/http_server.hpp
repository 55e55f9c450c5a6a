#pragma once

#include <memory>
#include <string>
#include <thread>

#include "httplib.h"

namespace atomic::http {

/// An httplib server listening on a background thread.
class HttpServer {
public:
  HttpServer();
  ~HttpServer();

  HttpServer(HttpServer const&) = delete;
  HttpServer& operator=(HttpServer const&) = delete;

  httplib::Server& routes() { return *server_; }

  /// Binds (port 0 picks a free port) and starts serving. Returns the bound
  /// port; throws std::runtime_error when binding fails.
  int start(std::string const& host, int port);
  void stop();

  bool running() const { return thread_.joinable(); }
  int port() const { return port_; }
  std::string base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_{0};
};

void reply_json(httplib::Response& res, int status, std::string const& body);
void reply_error(httplib::Response& res, int status, std::string const& message);

}  // namespace atomic::http
