// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lcsh/loc_client.hpp"
#include "lcsh/pipeline.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lcsh::mcp {

namespace rpc {
inline constexpr int kParseError = -32700;
inline constexpr int kInvalidRequest = -32600;
inline constexpr int kMethodNotFound = -32601;
inline constexpr int kInvalidParams = -32602;
inline constexpr int kNotInitialized = -32002;
}  // namespace rpc

enum class SessionState { AwaitingInitialize, Ready, Closed };

struct ToolDescriptor {
  std::string name;
  std::string description;
  nlohmann::json input_schema;
};

struct McpConfig {
  std::string server_name = "lcsh-loop-mcp";
  std::string protocol_version = "2025-06-18";
  std::vector<std::string> supported_versions = {"2024-11-05", "2025-03-26", "2025-06-18"};
  SessionConfig session;  // lookups are never degraded here
};

/// MCP server over newline-delimited JSON-RPC 2.0. One instance is one
/// session; requests are handled sequentially.
class McpServer {
 public:
  explicit McpServer(loc::LocClient& client, McpConfig cfg = {});

  /// Handles one line; returns the serialized reply, or nullopt for
  /// notifications, client responses and blank lines.
  std::optional<std::string> handle_line(std::string_view line);

  /// Reads until EOF, writing one reply per line and flushing after each.
  void serve(std::istream& in, std::ostream& out);

  SessionState state() const { return state_; }

  static const std::vector<ToolDescriptor>& tools();

  /// MCP CallToolResult; failures come back with isError true.
  nlohmann::json call_tool(const std::string& name, const nlohmann::json& arguments);

 private:
  nlohmann::json dispatch(const std::string& method, const nlohmann::json& params,
                          const nlohmann::json& id);

  nlohmann::json search_lcsh(const nlohmann::json& args);
  nlohmann::json validate_heading(const nlohmann::json& args);
  nlohmann::json get_authority(const nlohmann::json& args);

  loc::LocClient& client_;
  McpConfig cfg_;
  SessionState state_ = SessionState::AwaitingInitialize;
  std::string negotiated_version_;
};

}  // namespace lcsh::mcp
