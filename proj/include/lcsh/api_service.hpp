// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lcsh/loc_client.hpp"
#include "lcsh/pipeline.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace lcsh::api {

struct ApiRequest {
  std::string method;
  std::string path;
  std::string body;
  std::map<std::string, std::string> headers;  // keys lowercased
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::map<std::string, std::string> headers;
};

struct Route {
  std::string method;
  std::string path;
};

/// Returns a fresh suggester per session, or throws when none is available.
using SuggesterFactory = std::function<std::unique_ptr<Suggester>()>;

struct ApiConfig {
  std::string host = "127.0.0.1";
  int port = 8745;
  std::string profile = "test";
  bool degradable_lookups = true;
  std::vector<std::string> cors_origins;
  std::optional<std::string> shared_token;  // checked against X-LCSH-Token
  int requests_per_minute = 600;            // 0 disables the limit
  SessionConfig session;
};

inline constexpr std::size_t kMaxValidateTerms = 20;

class ApiService {
 public:
  ApiService(loc::LocClient& client, SuggesterFactory suggesters, ApiConfig cfg,
             std::shared_ptr<Clock> clock = nullptr);

  ApiResponse handle(const ApiRequest& request);

  static const std::vector<Route>& routes();
  nlohmann::json openapi_document() const;

  const ApiConfig& config() const { return cfg_; }

 private:
  ApiResponse validate(const ApiRequest& request);
  ApiResponse recommend(const ApiRequest& request);
  ApiResponse health();
  bool admit();

  loc::LocClient& client_;
  SuggesterFactory suggesters_;
  ApiConfig cfg_;
  std::shared_ptr<Clock> clock_;

  std::mutex window_mutex_;
  Clock::time_point window_start_{};
  int window_count_ = 0;
};

/// Binds an ApiService to a cpp-httplib server.
class ApiServer {
 public:
  explicit ApiServer(ApiService& service);
  ~ApiServer();

  /// Binds host:port (port 0 picks a free port); returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Serializes with invalid UTF-8 replaced, compact form.
std::string dump(const nlohmann::json& doc);

}  // namespace lcsh::api
