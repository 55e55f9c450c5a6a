#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace atomic::http {

struct Url {
  std::string scheme;
  std::string host;
  int port{0};
  std::string path;  // includes the query string, "/" when absent

  /// Throws std::invalid_argument for anything but http:// and https:// URLs.
  static Url parse(std::string_view url);
  std::string origin() const;
};

/// "host:port", ":port" or "port".
struct ListenAddress {
  std::string host{"127.0.0.1"};
  int port{0};

  static ListenAddress parse(std::string_view text);
  std::string str() const { return host + ":" + std::to_string(port); }
};

struct Response {
  int status{0};
  std::string body;
  std::multimap<std::string, std::string> headers;
};

/// Connection-level failure (refused, timeout, DNS).
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Headers = std::multimap<std::string, std::string>;

Response get(std::string const& url, int timeout_ms = 5000);
Response post(std::string const& url, std::string const& body, std::string const& content_type,
              Headers const& headers = {}, int timeout_ms = 5000);
Response patch(std::string const& url, std::string const& body, std::string const& content_type,
               int timeout_ms = 5000);
Response del(std::string const& url, int timeout_ms = 5000);

std::string url_encode(std::string_view s);
std::string with_query(std::string url, std::map<std::string, std::string> const& params);

}  // namespace atomic::http
