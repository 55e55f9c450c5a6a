#include "atomic/common/http_client.hpp"
#include "atomic/common/http_server.hpp"

#include <charconv>

#include "json.hpp"

namespace atomic::http {

Url Url::parse(std::string_view url) {
  Url u;
  auto const sep = url.find("://");
  if (sep == std::string_view::npos) {
    throw std::invalid_argument{"not an absolute URL: " + std::string{url}};
  }
  u.scheme = std::string{url.substr(0, sep)};
  if (u.scheme != "http" && u.scheme != "https") {
    throw std::invalid_argument{"unsupported URL scheme: " + u.scheme};
  }
  auto rest = url.substr(sep + 3);
  auto const slash = rest.find('/');
  auto authority = rest.substr(0, slash);
  u.path = slash == std::string_view::npos ? "/" : std::string{rest.substr(slash)};
  u.port = u.scheme == "https" ? 443 : 80;
  if (auto const colon = authority.rfind(':'); colon != std::string_view::npos) {
    auto const port_text = authority.substr(colon + 1);
    auto const [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), u.port);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || u.port <= 0 || u.port > 65535) {
      throw std::invalid_argument{"bad port in URL: " + std::string{url}};
    }
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) {
    throw std::invalid_argument{"URL without host: " + std::string{url}};
  }
  u.host = std::string{authority};
  return u;
}

std::string Url::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

ListenAddress ListenAddress::parse(std::string_view text) {
  ListenAddress a;
  auto port_text = text;
  if (auto const colon = text.rfind(':'); colon != std::string_view::npos) {
    if (colon > 0) {
      a.host = std::string{text.substr(0, colon)};
    }
    port_text = text.substr(colon + 1);
  }
  auto const [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), a.port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || a.port < 0 || a.port > 65535) {
    throw std::invalid_argument{"listen address must be host:port: " + std::string{text}};
  }
  return a;
}

namespace {

httplib::Client make_client(Url const& u, int timeout_ms) {
  httplib::Client cli{u.origin()};
  auto const secs = timeout_ms / 1000;
  auto const usecs = (timeout_ms % 1000) * 1000;
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  return cli;
}

Response convert(httplib::Result const& r, std::string const& url) {
  if (!r) {
    throw TransportError{"request to " + url + " failed: " + httplib::to_string(r.error())};
  }
  Response out{r->status, r->body, {}};
  for (auto const& [k, v] : r->headers) {
    out.headers.emplace(k, v);
  }
  return out;
}

httplib::Headers to_httplib(Headers const& h) { return httplib::Headers{h.begin(), h.end()}; }

}  // namespace

Response get(std::string const& url, int timeout_ms) {
  auto const u = Url::parse(url);
  auto cli = make_client(u, timeout_ms);
  return convert(cli.Get(u.path), url);
}

Response post(std::string const& url, std::string const& body, std::string const& content_type,
              Headers const& headers, int timeout_ms) {
  auto const u = Url::parse(url);
  auto cli = make_client(u, timeout_ms);
  return convert(cli.Post(u.path, to_httplib(headers), body, content_type), url);
}

Response patch(std::string const& url, std::string const& body, std::string const& content_type, int timeout_ms) {
  auto const u = Url::parse(url);
  auto cli = make_client(u, timeout_ms);
  return convert(cli.Patch(u.path, body, content_type), url);
}

Response del(std::string const& url, int timeout_ms) {
  auto const u = Url::parse(url);
  auto cli = make_client(u, timeout_ms);
  return convert(cli.Delete(u.path), url);
}

std::string url_encode(std::string_view s) { return httplib::detail::encode_query_param(std::string{s}); }

std::string with_query(std::string url, std::map<std::string, std::string> const& params) {
  auto first = url.find('?') == std::string::npos;
  for (auto const& [k, v] : params) {
    url += first ? '?' : '&';
    first = false;
    url += url_encode(k) + "=" + url_encode(v);
  }
  return url;
}

HttpServer::HttpServer() : server_{std::make_unique<httplib::Server>()} {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(std::string const& host, int port) {
  host_ = host;
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) {
    throw std::runtime_error{"cannot bind " + host + ":" + std::to_string(port)};
  }
  thread_ = std::thread{[this] { server_->listen_after_bind(); }};
  server_->wait_until_ready();
  return port_;
}

void HttpServer::stop() {
  if (thread_.joinable()) {
    server_->stop();
    thread_.join();
  }
}

void reply_json(httplib::Response& res, int status, std::string const& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

void reply_error(httplib::Response& res, int status, std::string const& message) {
  reply_json(res, status, nlohmann::json{{"error", message}}.dump());
}

}  // namespace atomic::http
