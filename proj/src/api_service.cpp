// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsh/api_service.hpp"

#include "lcsh/errors.hpp"
#include "lcsh/json_io.hpp"

#include <httplib.h>

#include <algorithm>

namespace lcsh::api {

using nlohmann::json;

std::string dump(const json& doc) {
  return doc.dump(-1, ' ', false, json::error_handler_t::replace);
}

namespace {

ApiResponse json_response(int status, const json& body) {
  ApiResponse r;
  r.status = status;
  r.body = dump(body);
  r.headers["Content-Type"] = "application/json";
  return r;
}

ApiResponse error_response(int status, std::string_view code, std::string_view detail) {
  return json_response(status, {{"error", code}, {"detail", detail}});
}

std::optional<std::string> header(const ApiRequest& r, const std::string& name) {
  auto it = r.headers.find(name);
  if (it == r.headers.end()) return std::nullopt;
  return it->second;
}

}  // namespace

ApiService::ApiService(loc::LocClient& client, SuggesterFactory suggesters, ApiConfig cfg,
                       std::shared_ptr<Clock> clock)
    : client_(client),
      suggesters_(std::move(suggesters)),
      cfg_(std::move(cfg)),
      clock_(clock ? std::move(clock) : system_clock()) {
  cfg_.session.validate();
}

const std::vector<Route>& ApiService::routes() {
  static const std::vector<Route> table = {
      {"GET", "/healthz"},
      {"GET", "/openapi.json"},
      {"POST", "/v1/recommend"},
      {"POST", "/v1/validate"},
  };
  return table;
}

bool ApiService::admit() {
  if (cfg_.requests_per_minute <= 0) return true;
  std::lock_guard lock(window_mutex_);
  const auto now = clock_->now();
  if (now - window_start_ >= std::chrono::minutes(1)) {
    window_start_ = now;
    window_count_ = 0;
  }
  if (window_count_ >= cfg_.requests_per_minute) return false;
  ++window_count_;
  return true;
}

ApiResponse ApiService::handle(const ApiRequest& request) {
  ApiResponse response;
  const auto origin = header(request, "origin");
  const bool cors = origin && std::find(cfg_.cors_origins.begin(), cfg_.cors_origins.end(),
                                        *origin) != cfg_.cors_origins.end();

  std::vector<std::string> allowed;
  for (const auto& route : routes()) {
    if (route.path == request.path) allowed.push_back(route.method);
  }

  if (request.method == "OPTIONS" && !allowed.empty()) {
    response.status = 204;
    response.headers["Allow"] = "OPTIONS";
    for (const auto& m : allowed) response.headers["Allow"] += ", " + m;
  } else if (allowed.empty()) {
    response = error_response(404, "not_found", "no route for " + request.method + " " + request.path);
  } else if (std::find(allowed.begin(), allowed.end(), request.method) == allowed.end()) {
    response = error_response(405, "method_not_allowed",
                              request.method + " is not supported on " + request.path);
    response.headers["Allow"] = allowed.front();
  } else if (request.path.rfind("/v1/", 0) == 0 && cfg_.shared_token &&
             header(request, "x-lcsh-token") != cfg_.shared_token) {
    response = error_response(401, "unauthorized", "missing or wrong X-LCSH-Token");
  } else if (request.path.rfind("/v1/", 0) == 0 && !admit()) {
    response = error_response(429, "rate_limited", "request limit reached; retry later");
    response.headers["Retry-After"] = "60";
  } else if (request.path == "/v1/validate") {
    response = validate(request);
  } else if (request.path == "/v1/recommend") {
    response = recommend(request);
  } else if (request.path == "/healthz") {
    response = health();
  } else {
    response = json_response(200, openapi_document());
  }

  if (cors) {
    response.headers["Access-Control-Allow-Origin"] = *origin;
    response.headers["Access-Control-Allow-Methods"] = "GET, POST, OPTIONS";
    response.headers["Access-Control-Allow-Headers"] = "Content-Type, X-LCSH-Token";
    response.headers["Vary"] = "Origin";
  }
  return response;
}

ApiResponse ApiService::validate(const ApiRequest& request) {
  json body = json::parse(request.body, nullptr, false);
  if (body.is_discarded()) return error_response(400, "invalid_json", "request body is not JSON");
  if (!body.is_object() || !body.contains("terms") || !body["terms"].is_array()) {
    return error_response(400, "invalid_request", "body must be {\"terms\": [string, ...]}");
  }
  const auto& terms = body["terms"];
  if (terms.empty() || terms.size() > kMaxValidateTerms) {
    return error_response(400, "invalid_request", "terms must hold 1 to 20 entries");
  }
  std::vector<CandidateTerm> candidates;
  for (const auto& t : terms) {
    if (!t.is_string() || collapse_whitespace(t.get<std::string>()).empty()) {
      return error_response(400, "invalid_request", "every term must be a non-empty string");
    }
    candidates.push_back({t.get<std::string>(), 0, std::nullopt});
  }

  SessionConfig session = cfg_.session;
  session.degradable_lookups = cfg_.degradable_lookups;
  try {
    json results = json::array();
    for (const auto& o : validate_candidates(candidates, client_, session)) {
      results.push_back(io::validation_result(o));
    }
    return json_response(200, {{"results", results}});
  } catch (const Error& e) {
    return error_response(502, "lookup_failed", e.what());
  }
}

ApiResponse ApiService::recommend(const ApiRequest& request) {
  json body = json::parse(request.body, nullptr, false);
  if (body.is_discarded()) return error_response(400, "invalid_json", "request body is not JSON");

  BibDescription bib;
  SessionConfig session = cfg_.session;
  session.degradable_lookups = cfg_.degradable_lookups;
  try {
    bib = io::bib_from_json(body);
    if (body.is_object() && body.contains("config")) io::apply_session_overrides(body["config"], session);
  } catch (const Error& e) {
    return error_response(400, e.code() == Errc::InvalidBib ? "invalid_bib" : "invalid_config",
                          e.what());
  }

  std::unique_ptr<Suggester> suggester;
  try {
    if (suggesters_) suggester = suggesters_();
  } catch (const std::exception& e) {
    return error_response(503, "suggester_unavailable", e.what());
  }
  if (!suggester) return error_response(503, "suggester_unavailable", "no suggester configured");

  try {
    return json_response(200, io::to_json(run_session(bib, *suggester, client_, session)));
  } catch (const Error& e) {
    switch (e.code()) {
      case Errc::EmptySuggestion:
        return error_response(503, "empty_suggestion", e.what());
      case Errc::SuggesterError:
        return error_response(503, "suggester_error", e.what());
      case Errc::InvalidBib:
        return error_response(400, "invalid_bib", e.what());
      default:
        return error_response(502, "lookup_failed", e.what());
    }
  }
}

ApiResponse ApiService::health() {
  return json_response(200, {{"status", "ok"}, {"loc_reachable", client_.reachable()}});
}

json ApiService::openapi_document() const {
  auto ref = [](const char* name) { return json{{"$ref", std::string("#/components/schemas/") + name}}; };
  auto body_of = [&](const char* name) {
    return json{{"content", {{"application/json", {{"schema", ref(name)}}}}}};
  };
  auto reply = [&](const char* description, const char* schema) {
    json r = body_of(schema);
    r["description"] = description;
    return r;
  };
  const json score = {{"type", "string"},
                      {"pattern", "^[01]\\.[0-9]{4}$"},
                      {"description", "Similarity in [0, 1] as a fixed four-decimal string."}};
  const json status = {{"type", "string"},
                       {"enum", {"ExactAuthorized", "VariantMatch", "PartialMatch", "Deprecated",
                                 "NotFound"}}};
  const json text = {{"type", "string"}};
  const json texts = {{"type", "array"}, {"items", text}};

  json schemas = {
      {"Error",
       {{"type", "object"},
        {"required", {"error", "detail"}},
        {"properties", {{"error", text}, {"detail", text}}}}},
      {"Health",
       {{"type", "object"},
        {"required", {"status", "loc_reachable"}},
        {"properties", {{"status", text}, {"loc_reachable", {{"type", "boolean"}}}}}}},
      {"ValidateRequest",
       {{"type", "object"},
        {"required", {"terms"}},
        {"properties",
         {{"terms",
           {{"type", "array"},
            {"minItems", 1},
            {"maxItems", kMaxValidateTerms},
            {"items", {{"type", "string"}, {"minLength", 1}}},
            {"description", "Candidate subject headings to check against LCSH."}}}}}}},
      {"Alternative",
       {{"type", "object"},
        {"required", {"label", "uri", "score"}},
        {"properties", {{"label", text}, {"uri", {{"type", "string"}, {"format", "uri"}}}, {"score", score}}}}},
      {"ValidationResult",
       {{"type", "object"},
        {"required", {"term", "status", "alternatives"}},
        {"properties",
         {{"term", text},
          {"status", status},
          {"authorized_label", text},
          {"uri", {{"type", "string"}, {"format", "uri"}}},
          {"alternatives", {{"type", "array"}, {"items", ref("Alternative")}}},
          {"error", text}}}}},
      {"ValidateResponse",
       {{"type", "object"},
        {"required", {"results"}},
        {"properties", {{"results", {{"type", "array"}, {"items", ref("ValidationResult")}}}}}}},
      {"SessionOverrides",
       {{"type", "object"},
        {"properties",
         {{"max_rounds", {{"type", "integer"}, {"minimum", 1}}},
          {"partial_threshold", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}},
          {"accept_threshold", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}},
          {"max_controlled", {{"type", "integer"}, {"minimum", 0}}},
          {"max_uncontrolled", {{"type", "integer"}, {"minimum", 0}}}}}}},
      {"RecommendRequest",
       {{"type", "object"},
        {"required", {"title"}},
        {"properties",
         {{"title", {{"type", "string"}, {"minLength", 1}}},
          {"contributors", texts},
          {"summary", text},
          {"table_of_contents", text},
          {"language_of_work", text},
          {"notes", text},
          {"config", ref("SessionOverrides")}}}}},
      {"ControlledHeading",
       {{"type", "object"},
        {"required", {"heading", "uri", "link", "justification"}},
        {"properties",
         {{"heading", text},
          {"uri", {{"type", "string"}, {"format", "uri"}}},
          {"link", {{"type", "string"}, {"format", "uri"}}},
          {"justification", text}}}}},
      {"Outcome",
       {{"type", "object"},
        {"required", {"candidate", "status", "matches"}},
        {"properties",
         {{"candidate", {{"type", "object"}}},
          {"status", status},
          {"matches", {{"type", "array"}, {"items", {{"type", "object"}}}}},
          {"resolved_uri", text},
          {"authorized_label", text},
          {"error", text}}}}},
      {"RecommendResponse",
       {{"type", "object"},
        {"required", {"controlled", "uncontrolled", "rounds_used", "audit"}},
        {"properties",
         {{"controlled", {{"type", "array"}, {"items", ref("ControlledHeading")}}},
          {"uncontrolled", texts},
          {"rounds_used", {{"type", "integer"}, {"minimum", 1}}},
          {"audit",
           {{"type", "array"}, {"items", {{"type", "array"}, {"items", ref("Outcome")}}}}}}}}},
  };

  const json err400 = reply("Malformed request", "Error");
  const json err429 = reply("Rate limit reached", "Error");
  const json err502 = reply("LOC lookup failed", "Error");
  const json err503 = reply("Suggester unavailable or returned nothing", "Error");

  json paths = {
      {"/v1/validate",
       {{"post",
         {{"operationId", "validateTerms"},
          {"summary", "Validate candidate subject headings against LCSH"},
          {"description",
           "Checks each term with the LOC Linked Data Service and returns its status, the "
           "authorized form and URI when found, and scored alternatives."},
          {"requestBody", [&] { json b = body_of("ValidateRequest"); b["required"] = true; return b; }()},
          {"responses",
           {{"200", reply("One result per term, in request order", "ValidateResponse")},
            {"400", err400},
            {"429", err429},
            {"502", err502}}}}}}},
      {"/v1/recommend",
       {{"post",
         {{"operationId", "recommendHeadings"},
          {"summary", "Run the suggest-validate-refine loop for one work"},
          {"description",
           "Generates candidate headings, validates them against LCSH, feeds the results back "
           "for one refinement round, and returns validated headings with links."},
          {"requestBody", [&] { json b = body_of("RecommendRequest"); b["required"] = true; return b; }()},
          {"responses",
           {{"200", reply("Finalized recommendation set", "RecommendResponse")},
            {"400", err400},
            {"429", err429},
            {"502", err502},
            {"503", err503}}}}}}},
      {"/openapi.json",
       {{"get",
         {{"operationId", "getOpenApi"},
          {"summary", "This document"},
          {"responses",
           {{"200",
             {{"description", "OpenAPI document"},
              {"content", {{"application/json", {{"schema", {{"type", "object"}}}}}}}}}}}}}}},
      {"/healthz",
       {{"get",
         {{"operationId", "getHealth"},
          {"summary", "Liveness and LOC reachability"},
          {"responses", {{"200", reply("Service status", "Health")}}}}}}},
  };

  return {
      {"openapi", "3.1.0"},
      {"info",
       {{"title", "lcsh-loop API"},
        {"version", LCSH_VERSION},
        {"description",
         "Validates LLM-suggested Library of Congress Subject Headings against the LOC Linked "
         "Data Service."}}},
      {"servers", {{{"url", "http://" + cfg_.host + ":" + std::to_string(cfg_.port)}}}},
      {"paths", paths},
      {"components",
       {{"schemas", schemas},
        {"securitySchemes",
         {{"sharedToken", {{"type", "apiKey"}, {"in", "header"}, {"name", "X-LCSH-Token"}}}}}}},
  };
}

struct ApiServer::Impl {
  ApiService& service;
  httplib::Server server;
  explicit Impl(ApiService& s) : service(s) {}
};

ApiServer::ApiServer(ApiService& service) : impl_(std::make_unique<Impl>(service)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest request;
    request.method = req.method;
    request.path = req.path;
    request.body = req.body;
    for (const auto& [k, v] : req.headers) request.headers[to_lower_ascii(k)] = v;
    ApiResponse response = impl_->service.handle(request);
    res.status = response.status;
    std::string content_type = "application/json";
    for (const auto& [k, v] : response.headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        res.set_header(k, v);
      }
    }
    if (!response.body.empty()) res.set_content(response.body, content_type);
  };
  auto& s = impl_->server;
  s.Get(".*", handler);
  s.Post(".*", handler);
  s.Put(".*", handler);
  s.Delete(".*", handler);
  s.Patch(".*", handler);
  s.Options(".*", handler);
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void ApiServer::run() { impl_->server.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace lcsh::api
