// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lcsh/transport.hpp"

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace lcsh {

/// What identifies a LOC request for caching and fixtures. `url` is the path
/// relative to the configured base URL, so one store serves any base.
struct RequestDescriptor {
  std::string method = "GET";
  std::string url;
  QueryParams query;

  /// Lowercase hex SHA-256 of the canonical JSON form.
  std::string key() const;
  std::string canonical() const;
  bool operator==(const RequestDescriptor&) const = default;
};

struct Exchange {
  RequestDescriptor request;
  HttpResponse response;
  std::string recorded_at;
};

/// Headers kept when an exchange is recorded.
const std::vector<std::string>& recorded_header_names();

/// Pretty-printed JSON with sorted keys and a trailing newline; byte-stable.
std::string serialize_exchange(const Exchange& exchange);
/// Throws Error{MalformedResponse} on a document that is not an exchange.
Exchange parse_exchange(std::string_view text);

/// One file per exchange, named `<key>.json`.
class FixtureStore {
 public:
  explicit FixtureStore(std::filesystem::path dir);

  std::optional<Exchange> load(const RequestDescriptor& request) const;
  void save(const Exchange& exchange);

  std::vector<std::filesystem::path> files() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

}  // namespace lcsh
