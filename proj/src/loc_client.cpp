// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsh/loc_client.hpp"

#include "lcsh/errors.hpp"
#include "lcsh/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace lcsh::loc {

using nlohmann::json;

namespace {

constexpr std::string_view kMads = "http://www.loc.gov/mads/rdf/v1#";
constexpr std::string_view kSkos = "http://www.w3.org/2004/02/skos/core#";
constexpr std::string_view kRdfs = "http://www.w3.org/2000/01/rdf-schema#";

std::string strip_scheme(std::string_view s) {
  auto pos = s.find("://");
  return std::string(pos == std::string_view::npos ? s : s.substr(pos + 3));
}

std::string trim_slash(std::string s) {
  while (!s.empty() && s.back() == '/') s.pop_back();
  return s;
}

/// In-namespace URI rewritten to the id_base scheme; nullopt when foreign.
std::optional<std::string> canonicalize(const std::string& id_base, std::string_view uri) {
  const std::string base = trim_slash(id_base);
  const std::string ns = strip_scheme(base);
  if (!uri.starts_with("http://") && !uri.starts_with("https://")) return std::nullopt;
  const std::string rest = strip_scheme(uri);
  if (rest.size() < ns.size() || rest.compare(0, ns.size(), ns) != 0) return std::nullopt;
  if (rest.size() > ns.size() && rest[ns.size()] != '/') return std::nullopt;
  return base + rest.substr(ns.size());
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      auto hex = std::string(s.substr(i + 1, 2));
      char* end = nullptr;
      long v = std::strtol(hex.c_str(), &end, 16);
      if (end == hex.c_str() + 2) {
        out.push_back(static_cast<char>(v));
        i += 2;
        continue;
      }
    }
    out.push_back(s[i]);
  }
  return out;
}

std::string require_query(std::string_view q) {
  std::string text = collapse_whitespace(q);
  if (text.empty()) throw Error(Errc::EmptyQuery, "query is empty");
  return text;
}

std::string literal_of(const json& node, std::string_view property) {
  auto it = node.find(std::string(property));
  if (it == node.end()) return {};
  const json values = it->is_array() ? *it : json::array({*it});
  std::string first;
  for (const auto& v : values) {
    std::string text;
    std::string lang;
    if (v.is_string()) {
      text = v.get<std::string>();
    } else if (v.is_object() && v.contains("@value") && v["@value"].is_string()) {
      text = v["@value"].get<std::string>();
      if (v.contains("@language") && v["@language"].is_string()) lang = v["@language"];
    }
    if (text.empty()) continue;
    if (lang == "en") return text;
    if (first.empty()) first = text;
  }
  return first;
}

std::vector<std::string> ids_of(const json& node, std::string_view property) {
  std::vector<std::string> out;
  auto it = node.find(std::string(property));
  if (it == node.end()) return out;
  const json values = it->is_array() ? *it : json::array({*it});
  for (const auto& v : values) {
    if (v.is_object() && v.contains("@id") && v["@id"].is_string()) {
      out.push_back(v["@id"].get<std::string>());
    } else if (v.is_string()) {
      out.push_back(v.get<std::string>());
    }
  }
  return out;
}

bool has_type(const json& node, std::string_view type) {
  auto it = node.find("@type");
  if (it == node.end()) return false;
  const json values = it->is_array() ? *it : json::array({*it});
  return std::any_of(values.begin(), values.end(),
                     [&](const json& v) { return v.is_string() && v.get<std::string>() == type; });
}

std::string mads(std::string_view local) { return std::string(kMads) + std::string(local); }
std::string skos(std::string_view local) { return std::string(kSkos) + std::string(local); }

std::string node_label(const json& node) {
  for (const auto& prop : {mads("authoritativeLabel"), skos("prefLabel"),
                           mads("variantLabel"), std::string(kRdfs) + "label"}) {
    auto text = literal_of(node, prop);
    if (!text.empty()) return text;
  }
  return {};
}

}  // namespace

std::string_view mode_name(Mode m) noexcept {
  switch (m) {
    case Mode::Live: return "live";
    case Mode::Replay: return "replay";
    case Mode::Record: return "record";
  }
  return "live";
}

Mode parse_mode(std::string_view s) {
  if (s == "live") return Mode::Live;
  if (s == "replay") return Mode::Replay;
  if (s == "record") return Mode::Record;
  throw Error(Errc::InvalidConfig, "unknown lookup mode '" + std::string(s) + "'");
}

std::string_view match_kind_name(MatchKind k) noexcept {
  switch (k) {
    case MatchKind::AuthorizedLabel: return "AuthorizedLabel";
    case MatchKind::VariantLabel: return "VariantLabel";
    case MatchKind::Unknown: return "Unknown";
  }
  return "Unknown";
}

void LookupConfig::validate() const {
  if (page_size < 1 || page_size > 50) {
    throw Error(Errc::InvalidConfig, "page_size must be in [1, 50]");
  }
  if (base_url.find("://") == std::string::npos) {
    throw Error(Errc::InvalidConfig, "base_url must be absolute: " + base_url);
  }
  if (id_base.find("://") == std::string::npos) {
    throw Error(Errc::InvalidConfig, "id_base must be absolute: " + id_base);
  }
  if (mode != Mode::Live && fixture_dir.empty()) {
    throw Error(Errc::InvalidConfig, "replay/record mode needs a fixture directory");
  }
  if (max_retries < 0) throw Error(Errc::InvalidConfig, "max_retries must be >= 0");
}

LookupConfig LookupConfig::from_env(LookupConfig base) {
  if (const char* v = std::getenv("LCSH_LOC_BASE_URL"); v && *v) base.base_url = v;
  if (const char* v = std::getenv("LCSH_LOC_MODE"); v && *v) base.mode = parse_mode(v);
  if (const char* v = std::getenv("LCSH_FIXTURE_DIR"); v && *v) base.fixture_dir = v;
  if (const char* v = std::getenv("LCSH_CACHE_DIR"); v && *v) base.cache_dir = v;
  return base;
}

std::vector<SuggestHit> parse_suggest_body(std::string_view body, const std::string& id_base,
                                           std::size_t limit) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(Errc::MalformedResponse, std::string("suggest body is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("hits") || !doc["hits"].is_array()) {
    throw Error(Errc::MalformedResponse, "suggest body has no hits array");
  }
  auto text_field = [](const json& hit, const char* name) -> std::string {
    auto it = hit.find(name);
    return it != hit.end() && it->is_string() ? it->get<std::string>() : std::string();
  };
  std::vector<SuggestHit> hits;
  for (const auto& raw : doc["hits"]) {
    if (hits.size() >= limit) break;
    if (!raw.is_object()) throw Error(Errc::MalformedResponse, "suggest hit is not an object");
    const std::string uri = text_field(raw, "uri");
    if (uri.empty()) throw Error(Errc::MalformedResponse, "suggest hit without uri");
    auto canonical = canonicalize(id_base, uri);
    if (!canonical) continue;

    const std::string suggest_label = text_field(raw, "suggestLabel");
    const std::string authorized = text_field(raw, "aLabel");
    const std::string variant = text_field(raw, "vLabel");

    SuggestHit hit;
    hit.uri = *canonical;
    hit.authorized_label = authorized.empty() ? suggest_label : authorized;
    hit.label = variant.empty() ? suggest_label : variant;
    if (hit.label.empty()) hit.label = hit.authorized_label;
    if (hit.authorized_label.empty()) {
      throw Error(Errc::MalformedResponse, "suggest hit without a label: " + uri);
    }
    if (!variant.empty()) {
      hit.match_kind = MatchKind::VariantLabel;
    } else if (suggest_label == hit.authorized_label) {
      hit.match_kind = MatchKind::AuthorizedLabel;
    }
    hits.push_back(std::move(hit));
  }
  return hits;
}

AuthorityRecord parse_authority_body(std::string_view body, const std::string& uri,
                                     const std::string& id_base) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(Errc::MalformedResponse, std::string("authority body is not JSON: ") + e.what());
  }
  if (doc.is_object() && doc.contains("@graph")) doc = doc["@graph"];
  if (!doc.is_array()) throw Error(Errc::MalformedResponse, "authority body is not a node list");

  // Node ids: in-namespace URIs canonicalized, blank nodes verbatim.
  std::map<std::string, const json*> nodes;
  for (const auto& node : doc) {
    if (!node.is_object() || !node.contains("@id") || !node["@id"].is_string()) continue;
    const std::string id = node["@id"].get<std::string>();
    nodes.emplace(canonicalize(id_base, id).value_or(id), &node);
  }
  const std::string self = canonicalize(id_base, uri).value_or(uri);
  auto it = nodes.find(self);
  if (it == nodes.end()) {
    throw Error(Errc::MalformedResponse, "authority body does not describe " + uri);
  }
  const json& main = *it->second;

  AuthorityRecord record;
  record.uri = self;
  record.deprecated = has_type(main, mads("DeprecatedAuthority"));
  record.authorized_label = node_label(main);
  if (record.authorized_label.empty()) {
    throw Error(Errc::MalformedResponse, "authority record without a label: " + uri);
  }

  std::set<std::string> seen_variants;
  auto add_variant = [&](const std::string& label) {
    if (label.empty() || label == record.authorized_label) return;
    if (seen_variants.insert(label).second) record.variant_labels.push_back(label);
  };
  for (const auto& id : ids_of(main, mads("hasVariant"))) {
    auto v = nodes.find(id);
    if (v != nodes.end()) add_variant(literal_of(*v->second, mads("variantLabel")));
  }
  if (auto it_alt = main.find(skos("altLabel")); it_alt != main.end()) {
    const json values = it_alt->is_array() ? *it_alt : json::array({*it_alt});
    for (const auto& v : values) {
      if (v.is_object() && v.contains("@value") && v["@value"].is_string()) add_variant(v["@value"]);
      if (v.is_string()) add_variant(v.get<std::string>());
    }
  }

  auto links = [&](std::string_view property) {
    std::vector<LinkedTerm> out;
    std::set<std::string> seen;
    for (const auto& id : ids_of(main, property)) {
      auto canonical = canonicalize(id_base, id);
      if (!canonical || !seen.insert(*canonical).second) continue;
      auto n = nodes.find(*canonical);
      out.push_back({*canonical, n == nodes.end() ? std::string() : node_label(*n->second)});
    }
    return out;
  };
  record.broader = links(mads("hasBroaderAuthority"));
  record.narrower = links(mads("hasNarrowerAuthority"));
  record.related = links(mads("hasReciprocalAuthority"));
  return record;
}

LocClient::LocClient(LookupConfig config, std::shared_ptr<Transport> transport,
                     std::shared_ptr<Clock> clock)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport) : std::make_shared<HttplibTransport>()),
      clock_(clock ? std::move(clock) : system_clock()) {
  config_.validate();
  config_.base_url = trim_slash(config_.base_url);
  config_.id_base = trim_slash(config_.id_base);
  if (config_.mode != Mode::Live) fixtures_.emplace(config_.fixture_dir);
}

bool LocClient::owns_uri(std::string_view uri) const {
  return canonicalize(config_.id_base, uri).has_value();
}

std::string LocClient::canonical_uri(std::string_view uri) const {
  auto c = canonicalize(config_.id_base, uri);
  if (!c) throw Error(Errc::ForeignUri, "uri outside " + config_.id_base + ": " + std::string(uri));
  return *c;
}

ClientStats LocClient::stats() const {
  return {lookups_.load(), underlying_.load(), cache_hits_.load(), network_attempts_.load()};
}

std::vector<SuggestHit> LocClient::suggest(std::string_view query, std::optional<int> count) {
  const std::string q = require_query(query);
  const int n = count.value_or(config_.page_size);
  if (n < 1 || n > 50) throw Error(Errc::InvalidConfig, "count must be in [1, 50]");

  RequestDescriptor request{"GET", "/authorities/subjects/suggest2",
                            {{"q", q}, {"count", std::to_string(n)}}};
  HttpResponse response = exchange(request);
  if (response.status != 200) {
    throw Error(Errc::ServiceError, "suggest2 returned " + std::to_string(response.status),
                response.status);
  }
  return parse_suggest_body(response.body, config_.id_base, static_cast<std::size_t>(n));
}

std::optional<LabelResolution> LocClient::resolve_label(std::string_view label) {
  const std::string text = require_query(label);
  RequestDescriptor request{"GET", "/authorities/subjects/label/" + percent_encode(text), {}};
  HttpResponse response = exchange(request);

  if (response.status == 404) return std::nullopt;

  auto identify = [this](const HttpResponse& r) -> std::optional<LabelResolution> {
    auto uri = r.header("x-uri");
    std::optional<std::string> pref;
    if (auto encoded = r.header("x-preflabel-encoded")) {
      pref = percent_decode(*encoded);
    } else {
      pref = r.header("x-preflabel");
    }
    if (!uri || !pref || pref->empty()) return std::nullopt;
    auto canonical = canonicalize(config_.id_base, *uri);
    if (!canonical) {
      throw Error(Errc::MalformedResponse, "label service named a foreign uri: " + *uri);
    }
    return LabelResolution{*canonical, *pref};
  };

  const bool redirect = response.status >= 300 && response.status < 400;
  if (!redirect && response.status != 200) {
    throw Error(Errc::ServiceError, "label lookup returned " + std::to_string(response.status),
                response.status);
  }
  if (auto found = identify(response)) return found;
  if (!redirect) throw Error(Errc::MalformedResponse, "label response without identifying headers");

  auto location = response.header("location");
  if (!location) throw Error(Errc::MalformedResponse, "label redirect without location");
  HttpResponse followed = exchange(path_request(*location));
  if (followed.status == 404) return std::nullopt;
  if (followed.status >= 200 && followed.status < 400) {
    if (auto found = identify(followed)) return found;
  }
  // No identifying headers anywhere: the redirect target is the authority.
  const std::string uri = canonical_uri(*location);
  return LabelResolution{uri, fetch_authority(uri).authorized_label};
}

AuthorityRecord LocClient::fetch_authority(std::string_view uri) {
  const std::string canonical = canonical_uri(uri);
  std::string path = canonical.substr(config_.id_base.size());
  if (path.size() > 5 && path.ends_with(".json")) path.resize(path.size() - 5);
  RequestDescriptor request{"GET", path + ".json", {}};
  HttpResponse response = exchange(request);
  if (response.status != 200) {
    throw Error(Errc::ServiceError,
                "authority fetch returned " + std::to_string(response.status), response.status);
  }
  return parse_authority_body(response.body, canonical, config_.id_base);
}

bool LocClient::reachable() {
  if (config_.mode == Mode::Replay) return true;
  HttpRequest probe;
  probe.method = "HEAD";
  probe.url = config_.base_url + "/";
  probe.timeout = std::min(config_.timeout, std::chrono::milliseconds(3000));
  try {
    ++network_attempts_;
    transport_->send(probe);
    return true;
  } catch (const Error&) {
    return false;
  }
}

RequestDescriptor LocClient::path_request(std::string_view target) const {
  std::string path;
  const std::string text(target);
  if (text.rfind(config_.base_url, 0) == 0) {
    path = text.substr(config_.base_url.size());
  } else if (auto canonical = canonicalize(config_.id_base, text)) {
    path = canonical->substr(config_.id_base.size());
  } else if (!text.empty() && text.front() == '/') {
    path = text;
  } else {
    throw Error(Errc::MalformedResponse, "redirect to foreign location: " + text);
  }
  // A query string on a redirect target stays in the path verbatim.
  return RequestDescriptor{"GET", path, {}};
}

namespace {

bool cacheable(const HttpResponse& r) { return r.status != 429 && r.status < 500; }

}  // namespace

HttpResponse LocClient::exchange(const RequestDescriptor& request) {
  ++lookups_;
  const std::string key = request.key();
  std::promise<HttpResponse> promise;
  {
    std::unique_lock lock(cache_mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end() && clock_->now() - it->second.stored < config_.cache_ttl) {
      ++cache_hits_;
      auto future = it->second.response;
      lock.unlock();
      return future.get();
    }
    if (auto disk = read_disk_cache(request)) {
      std::promise<HttpResponse> ready;
      ready.set_value(*disk);
      cache_[key] = {ready.get_future().share(), clock_->now()};
      ++cache_hits_;
      return *disk;
    }
    cache_[key] = {promise.get_future().share(), clock_->now()};
  }

  auto forget = [&] {
    std::lock_guard lock(cache_mutex_);
    cache_.erase(key);
  };
  try {
    HttpResponse response = fetch_uncached(request);
    promise.set_value(response);
    if (cacheable(response)) {
      write_disk_cache(request, response);
    } else {
      forget();
    }
    return response;
  } catch (...) {
    promise.set_exception(std::current_exception());
    forget();
    throw;
  }
}

HttpResponse LocClient::fetch_uncached(const RequestDescriptor& request) {
  ++underlying_;
  switch (config_.mode) {
    case Mode::Replay: {
      auto recorded = fixtures_->load(request);
      if (!recorded) {
        throw Error(Errc::ReplayMiss, "no fixture for " + request.canonical());
      }
      return recorded->response;
    }
    case Mode::Record: {
      HttpResponse response = send_live(request);
      if (cacheable(response)) {
        fixtures_->save({request, response, format_timestamp(clock_->now())});
      }
      return response;
    }
    case Mode::Live:
      break;
  }
  return send_live(request);
}

void LocClient::wait_for_slot() {
  Clock::time_point slot;
  Clock::time_point now;
  {
    std::lock_guard lock(rate_mutex_);
    now = clock_->now();
    slot = next_slot_ ? std::max(now, *next_slot_) : now;
    next_slot_ = slot + config_.min_request_interval;
  }
  if (slot > now) {
    clock_->sleep_for(std::chrono::ceil<std::chrono::milliseconds>(slot - now));
  }
}

HttpResponse LocClient::send_live(const RequestDescriptor& request) {
  HttpRequest http;
  http.method = request.method;
  http.url = config_.base_url + request.url;
  if (!request.query.empty()) http.url += "?" + encode_query(request.query);
  http.headers["Accept"] = "application/json";
  http.headers["User-Agent"] = "lcsh-loop/" LCSH_VERSION;
  http.timeout = config_.timeout;

  for (int attempt = 0;; ++attempt) {
    const bool last = attempt >= config_.max_retries;
    wait_for_slot();
    ++network_attempts_;
    try {
      HttpResponse raw = transport_->send(http);
      if (!last && !cacheable(raw)) {
        clock_->sleep_for(config_.retry_backoff * (1 << attempt));
        continue;
      }
      HttpResponse kept;
      kept.status = raw.status;
      kept.body = std::move(raw.body);
      for (const auto& name : recorded_header_names()) {
        if (auto v = raw.header(name)) kept.headers[name] = *v;
      }
      return kept;
    } catch (const Error& e) {
      if (e.code() != Errc::NetworkError || last) throw;
      clock_->sleep_for(config_.retry_backoff * (1 << attempt));
    }
  }
}

std::optional<HttpResponse> LocClient::read_disk_cache(const RequestDescriptor& request) {
  if (config_.cache_dir.empty() || config_.mode == Mode::Replay) return std::nullopt;
  std::ifstream in(config_.cache_dir / (request.key() + ".json"), std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    Exchange e = parse_exchange(buf.str());
    auto stored = parse_timestamp(e.recorded_at);
    if (!(e.request == request) || !stored) return std::nullopt;
    if (clock_->now() - *stored >= config_.cache_ttl) return std::nullopt;
    return e.response;
  } catch (const Error&) {
    return std::nullopt;
  }
}

void LocClient::write_disk_cache(const RequestDescriptor& request, const HttpResponse& response) {
  if (config_.cache_dir.empty() || config_.mode == Mode::Replay) return;
  std::error_code ec;
  std::filesystem::create_directories(config_.cache_dir, ec);
  std::ofstream out(config_.cache_dir / (request.key() + ".json"),
                    std::ios::binary | std::ios::trunc);
  out << serialize_exchange({request, response, format_timestamp(clock_->now())});
}

}  // namespace lcsh::loc
