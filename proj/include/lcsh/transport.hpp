// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lcsh {

using QueryParams = std::vector<std::pair<std::string, std::string>>;

struct HttpRequest {
  std::string method = "GET";
  std::string url;  // absolute, query string included
  std::map<std::string, std::string> headers;
  std::string body;
  std::chrono::milliseconds timeout{10000};
};

struct HttpResponse {
  int status = 0;
  std::map<std::string, std::string> headers;  // keys lowercased
  std::string body;

  std::optional<std::string> header(std::string_view name) const;
  bool operator==(const HttpResponse&) const = default;
};

/// Sends one HTTP exchange without following redirects. Throws
/// Error{NetworkError} when no response was obtained.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport; https when built with OpenSSL.
class HttplibTransport final : public Transport {
 public:
  HttpResponse send(const HttpRequest& request) override;
};

class Clock {
 public:
  using time_point = std::chrono::system_clock::time_point;
  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class SystemClock final : public Clock {
 public:
  time_point now() override { return std::chrono::system_clock::now(); }
  void sleep_for(std::chrono::milliseconds d) override;
};

std::shared_ptr<Clock> system_clock();

/// RFC 3986 percent-encoding of everything outside the unreserved set.
std::string percent_encode(std::string_view s);

std::string encode_query(const QueryParams& params);

std::string to_lower_ascii(std::string_view s);

/// ISO-8601 UTC, second precision.
std::string format_timestamp(Clock::time_point t);
std::optional<Clock::time_point> parse_timestamp(std::string_view s);

}  // namespace lcsh
