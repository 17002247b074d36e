// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsh/mcp_server.hpp"

#include "lcsh/errors.hpp"
#include "lcsh/json_io.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace lcsh::mcp {

using nlohmann::json;

namespace {

/// Thrown inside dispatch to produce a JSON-RPC error reply.
struct RpcError {
  int code;
  std::string message;
};

std::string serialize(const json& doc) {
  return doc.dump(-1, ' ', false, json::error_handler_t::replace);
}

json error_reply(const json& id, int code, std::string_view message) {
  return {{"jsonrpc", "2.0"}, {"id", id}, {"error", {{"code", code}, {"message", message}}}};
}

json tool_error(std::string_view message) {
  return {{"content", json::array({{{"type", "text"}, {"text", message}}})}, {"isError", true}};
}

json tool_result(std::string text, json structured) {
  return {{"content", json::array({{{"type", "text"}, {"text", std::move(text)}}})},
          {"structuredContent", std::move(structured)},
          {"isError", false}};
}

std::optional<std::string> string_arg(const json& args, const char* key) {
  auto it = args.find(key);
  if (it == args.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

McpServer::McpServer(loc::LocClient& client, McpConfig cfg)
    : client_(client), cfg_(std::move(cfg)) {
  cfg_.session.degradable_lookups = false;
  cfg_.session.validate();
}

const std::vector<ToolDescriptor>& McpServer::tools() {
  static const std::vector<ToolDescriptor> list = {
      {"search_lcsh",
       "Search Library of Congress Subject Headings for a query term. Returns matching "
       "headings with their authorized labels and id.loc.gov URIs.",
       {{"type", "object"},
        {"properties",
         {{"query", {{"type", "string"}, {"description", "Term or phrase to look up"}}},
          {"count",
           {{"type", "integer"},
            {"minimum", 1},
            {"maximum", 50},
            {"description", "Maximum number of hits (default 10)"}}}}},
        {"required", {"query"}},
        {"additionalProperties", false}}},
      {"validate_heading",
       "Check whether a subject heading is a valid LCSH heading. Returns the validation status "
       "(ExactAuthorized, VariantMatch, PartialMatch, Deprecated, NotFound), the authorized "
       "form and URI when resolved, and scored alternatives.",
       {{"type", "object"},
        {"properties",
         {{"term", {{"type", "string"}, {"description", "Heading in display form, e.g. "
                                                          "\"China--History--20th century\""}}}}},
        {"required", {"term"}},
        {"additionalProperties", false}}},
      {"get_authority",
       "Fetch an LCSH authority record by URI, including variant labels and broader, narrower "
       "and related headings.",
       {{"type", "object"},
        {"properties",
         {{"uri", {{"type", "string"}, {"description", "An id.loc.gov authority URI"}}}}},
        {"required", {"uri"}},
        {"additionalProperties", false}}},
  };
  return list;
}

std::optional<std::string> McpServer::handle_line(std::string_view line) {
  if (line.find_first_not_of(" \t\r\n") == std::string_view::npos) return std::nullopt;

  json msg = json::parse(line, nullptr, false);
  if (msg.is_discarded()) return serialize(error_reply(nullptr, rpc::kParseError, "Parse error"));
  if (!msg.is_object()) {
    return serialize(error_reply(nullptr, rpc::kInvalidRequest, "Invalid Request"));
  }

  json id = nullptr;
  bool has_id = msg.contains("id");
  if (has_id) {
    const json& raw = msg["id"];
    if (raw.is_string() || raw.is_number_integer()) {
      id = raw;
    } else {
      return serialize(error_reply(nullptr, rpc::kInvalidRequest, "Invalid Request: bad id"));
    }
  }

  if (!msg.contains("method")) {
    // A response from the client; nothing to answer.
    if (msg.contains("result") || msg.contains("error")) return std::nullopt;
    return serialize(error_reply(id, rpc::kInvalidRequest, "Invalid Request"));
  }
  if (!msg["method"].is_string() || msg.value("jsonrpc", json()) != "2.0") {
    if (!has_id) return std::nullopt;
    return serialize(error_reply(id, rpc::kInvalidRequest, "Invalid Request"));
  }
  const std::string method = msg["method"].get<std::string>();
  const json params = msg.value("params", json::object());

  if (!has_id) {
    // Notifications never get replies. notifications/initialized needs no
    // work: the session is Ready once initialize has been answered.
    return std::nullopt;
  }
  if (!params.is_object() && !params.is_array()) {
    return serialize(error_reply(id, rpc::kInvalidRequest, "Invalid Request: params"));
  }

  try {
    json result = dispatch(method, params, id);
    return serialize({{"jsonrpc", "2.0"}, {"id", id}, {"result", result}});
  } catch (const RpcError& e) {
    return serialize(error_reply(id, e.code, e.message));
  }
}

json McpServer::dispatch(const std::string& method, const json& params, const json&) {
  if (method == "initialize") {
    if (state_ != SessionState::AwaitingInitialize) {
      throw RpcError{rpc::kInvalidRequest, "session already initialized"};
    }
    std::string version = cfg_.protocol_version;
    if (params.is_object() && params.contains("protocolVersion") &&
        params["protocolVersion"].is_string()) {
      const auto requested = params["protocolVersion"].get<std::string>();
      if (std::find(cfg_.supported_versions.begin(), cfg_.supported_versions.end(), requested) !=
          cfg_.supported_versions.end()) {
        version = requested;
      }
    }
    negotiated_version_ = version;
    state_ = SessionState::Ready;
    return {{"protocolVersion", version},
            {"capabilities", {{"tools", {{"listChanged", false}}}}},
            {"serverInfo", {{"name", cfg_.server_name}, {"version", LCSH_VERSION}}},
            {"instructions",
             "Validate subject headings against the Library of Congress Linked Data Service "
             "before recommending them."}};
  }
  if (method == "ping") return json::object();

  if (method == "tools/list" || method == "tools/call") {
    if (state_ != SessionState::Ready) {
      throw RpcError{rpc::kNotInitialized, "server not initialized"};
    }
    if (method == "tools/list") {
      json list = json::array();
      for (const auto& t : tools()) {
        list.push_back({{"name", t.name}, {"description", t.description}, {"inputSchema", t.input_schema}});
      }
      return {{"tools", list}};
    }
    if (!params.is_object() || !params.contains("name") || !params["name"].is_string()) {
      throw RpcError{rpc::kInvalidParams, "tools/call needs a tool name"};
    }
    const std::string name = params["name"].get<std::string>();
    const bool known = std::any_of(tools().begin(), tools().end(),
                                   [&](const ToolDescriptor& t) { return t.name == name; });
    if (!known) throw RpcError{rpc::kInvalidParams, "unknown tool: " + name};
    json args = params.value("arguments", json::object());
    if (!args.is_object()) throw RpcError{rpc::kInvalidParams, "arguments must be an object"};
    return call_tool(name, args);
  }
  throw RpcError{rpc::kMethodNotFound, "Method not found: " + method};
}

json McpServer::call_tool(const std::string& name, const json& arguments) {
  try {
    if (name == "search_lcsh") return search_lcsh(arguments);
    if (name == "validate_heading") return validate_heading(arguments);
    if (name == "get_authority") return get_authority(arguments);
    return tool_error("unknown tool: " + name);
  } catch (const Error& e) {
    return tool_error(std::string(errc_name(e.code())) + ": " + e.what());
  }
}

json McpServer::search_lcsh(const json& args) {
  auto query = string_arg(args, "query");
  if (!query || collapse_whitespace(*query).empty()) return tool_error("empty query");
  std::optional<int> count;
  if (args.contains("count")) {
    if (!args["count"].is_number_integer() || args["count"].get<int>() < 1 ||
        args["count"].get<int>() > 50) {
      return tool_error("count must be an integer in [1, 50]");
    }
    count = args["count"].get<int>();
  }
  const auto hits = client_.suggest(*query, count.value_or(10));

  std::ostringstream text;
  text << hits.size() << " LCSH hit(s) for \"" << *query << "\"";
  json list = json::array();
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const auto& h = hits[i];
    text << "\n" << i + 1 << ". " << h.label;
    if (h.label != h.authorized_label) text << " (use: " << h.authorized_label << ")";
    text << " <" << h.uri << ">";
    list.push_back(io::to_json(h));
  }
  return tool_result(text.str(), {{"query", *query}, {"hits", list}});
}

json McpServer::validate_heading(const json& args) {
  auto term = string_arg(args, "term");
  if (!term || collapse_whitespace(*term).empty()) return tool_error("empty term");
  const auto outcomes = validate_candidates({{*term, 0, std::nullopt}}, client_, cfg_.session);
  const auto& o = outcomes.front();

  std::ostringstream text;
  text << "\"" << *term << "\": " << status_name(o.status);
  if (o.authorized_label) text << "\nauthorized form: " << *o.authorized_label;
  if (o.resolved_uri) text << "\nuri: " << *o.resolved_uri;
  json structured = io::validation_result(o);
  for (const auto& alt : structured["alternatives"]) {
    text << "\nalternative: " << alt["label"].get<std::string>() << " ("
         << alt["score"].get<std::string>() << ") <" << alt["uri"].get<std::string>() << ">";
  }
  return tool_result(text.str(), structured);
}

json McpServer::get_authority(const json& args) {
  auto uri = string_arg(args, "uri");
  if (!uri || uri->empty()) return tool_error("empty uri");
  if (!client_.owns_uri(*uri)) return tool_error("foreign uri: " + *uri);
  const auto record = client_.fetch_authority(*uri);

  std::ostringstream text;
  text << record.authorized_label << " <" << record.uri << ">";
  if (record.deprecated) text << "\n(deprecated)";
  auto list = [&](const char* label, const std::vector<loc::LinkedTerm>& terms) {
    if (terms.empty()) return;
    text << "\n" << label << ":";
    for (const auto& t : terms) text << "\n  - " << (t.label.empty() ? t.uri : t.label);
  };
  if (!record.variant_labels.empty()) {
    text << "\nvariants:";
    for (const auto& v : record.variant_labels) text << "\n  - " << v;
  }
  list("broader", record.broader);
  list("narrower", record.narrower);
  list("related", record.related);
  return tool_result(text.str(), io::to_json(record));
}

void McpServer::serve(std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (auto reply = handle_line(line)) {
      out << *reply << '\n';
      out.flush();
    }
  }
  state_ = SessionState::Closed;
}

}  // namespace lcsh::mcp
