// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lcsh/fixture_store.hpp"
#include "lcsh/transport.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lcsh::loc {

using namespace std::chrono_literals;

enum class Mode { Live, Replay, Record };

std::string_view mode_name(Mode m) noexcept;
/// "live" | "replay" | "record"; throws Error{InvalidConfig}.
Mode parse_mode(std::string_view s);

struct LookupConfig {
  std::string base_url = "https://id.loc.gov";  // where requests are sent
  std::string id_base = "https://id.loc.gov";   // namespace of authority URIs
  int page_size = 10;
  std::chrono::milliseconds timeout = 10s;
  std::chrono::milliseconds min_request_interval = 250ms;
  std::chrono::seconds cache_ttl = 24h;
  Mode mode = Mode::Live;
  std::filesystem::path fixture_dir;
  std::filesystem::path cache_dir;  // empty: in-memory cache only
  int max_retries = 2;
  std::chrono::milliseconds retry_backoff = 500ms;

  /// Throws Error{InvalidConfig}.
  void validate() const;

  /// Applies LCSH_LOC_BASE_URL, LCSH_LOC_MODE, LCSH_FIXTURE_DIR and
  /// LCSH_CACHE_DIR on top of `base`.
  static LookupConfig from_env(LookupConfig base);
  static LookupConfig from_env() { return from_env(LookupConfig()); }
};

enum class MatchKind { AuthorizedLabel, VariantLabel, Unknown };

std::string_view match_kind_name(MatchKind k) noexcept;

struct SuggestHit {
  std::string label;  // the label the query matched
  std::string uri;
  std::string authorized_label;
  MatchKind match_kind = MatchKind::Unknown;

  bool operator==(const SuggestHit&) const = default;
};

struct LinkedTerm {
  std::string uri;
  std::string label;

  bool operator==(const LinkedTerm&) const = default;
};

struct AuthorityRecord {
  std::string uri;
  std::string authorized_label;
  std::vector<std::string> variant_labels;
  std::vector<LinkedTerm> broader;
  std::vector<LinkedTerm> narrower;
  std::vector<LinkedTerm> related;
  bool deprecated = false;

  bool operator==(const AuthorityRecord&) const = default;
};

struct LabelResolution {
  std::string uri;
  std::string authorized_label;

  bool operator==(const LabelResolution&) const = default;
};

struct ClientStats {
  std::size_t lookups = 0;          // calls that needed a response
  std::size_t underlying = 0;       // exchanges not served by the cache
  std::size_t cache_hits = 0;
  std::size_t network_attempts = 0; // transport sends, retries included
};

// Response parsing, kept separate so fixture tests can drive it directly.
std::vector<SuggestHit> parse_suggest_body(std::string_view body, const std::string& id_base,
                                           std::size_t limit);
AuthorityRecord parse_authority_body(std::string_view body, const std::string& uri,
                                     const std::string& id_base);

/// Client for the LOC Linked Data Service. Thread-safe.
class LocClient {
 public:
  explicit LocClient(LookupConfig config, std::shared_ptr<Transport> transport = nullptr,
                     std::shared_ptr<Clock> clock = nullptr);

  /// Suggest-style search. `count` overrides the configured page size.
  std::vector<SuggestHit> suggest(std::string_view query, std::optional<int> count = {});

  /// Known-label resolution; nullopt on a definitive not-found.
  std::optional<LabelResolution> resolve_label(std::string_view label);

  AuthorityRecord fetch_authority(std::string_view uri);

  /// Replay mode always reports true.
  bool reachable();

  /// True when `uri` lies in the identifier namespace (either scheme).
  bool owns_uri(std::string_view uri) const;
  /// Rewrites an in-namespace URI to the id_base scheme.
  std::string canonical_uri(std::string_view uri) const;

  ClientStats stats() const;
  const LookupConfig& config() const { return config_; }

 private:
  HttpResponse exchange(const RequestDescriptor& request);
  HttpResponse fetch_uncached(const RequestDescriptor& request);
  HttpResponse send_live(const RequestDescriptor& request);
  void wait_for_slot();
  RequestDescriptor path_request(std::string_view uri_or_path) const;

  struct CacheEntry {
    std::shared_future<HttpResponse> response;
    Clock::time_point stored;
  };
  std::optional<HttpResponse> read_disk_cache(const RequestDescriptor& request);
  void write_disk_cache(const RequestDescriptor& request, const HttpResponse& response);

  LookupConfig config_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<Clock> clock_;
  std::optional<FixtureStore> fixtures_;

  std::mutex cache_mutex_;
  std::map<std::string, CacheEntry> cache_;

  std::mutex rate_mutex_;
  std::optional<Clock::time_point> next_slot_;

  std::atomic<std::size_t> lookups_{0};
  std::atomic<std::size_t> underlying_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> network_attempts_{0};
};

}  // namespace lcsh::loc
