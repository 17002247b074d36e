// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

// lcsh-loop: batch validation and recommendation, fixture recording, and
// launchers for the HTTP API and the MCP stdio server.

#include "lcsh/api_service.hpp"
#include "lcsh/batch.hpp"
#include "lcsh/errors.hpp"
#include "lcsh/loc_client.hpp"
#include "lcsh/mcp_server.hpp"
#include "lcsh/suggesters.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct LookupOptions {
  std::string fixtures;
  std::string mode;
  std::string base_url;
  std::string cache_dir;
};

void add_lookup_options(CLI::App* cmd, LookupOptions& o) {
  cmd->add_option("--fixtures", o.fixtures, "Fixture directory (implies replay unless --mode)");
  cmd->add_option("--mode", o.mode, "Lookup mode")->check(CLI::IsMember({"live", "replay", "record"}));
  cmd->add_option("--base-url", o.base_url, "Linked data service base URL");
  cmd->add_option("--cache-dir", o.cache_dir, "Persistent response cache directory");
}

lcsh::loc::LookupConfig lookup_config(const LookupOptions& o,
                                      std::optional<lcsh::loc::Mode> fallback = {}) {
  auto cfg = lcsh::loc::LookupConfig::from_env();
  if (fallback) cfg.mode = *fallback;
  if (!o.fixtures.empty()) {
    cfg.fixture_dir = o.fixtures;
    if (o.mode.empty() && !fallback) cfg.mode = lcsh::loc::Mode::Replay;
  }
  if (!o.mode.empty()) cfg.mode = lcsh::loc::parse_mode(o.mode);
  if (!o.base_url.empty()) cfg.base_url = o.base_url;
  if (!o.cache_dir.empty()) cfg.cache_dir = o.cache_dir;
  cfg.validate();
  return cfg;
}

void write_file(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out.flush()) throw std::runtime_error("cannot write " + path);
}

void emit_report(const lcsh::batch::BatchReport& report, const std::string& path) {
  const std::string text = report.summary_json().dump(2) + "\n";
  if (path.empty()) {
    std::cerr << text;
  } else {
    write_file(path, text);
  }
}

std::vector<lcsh::batch::InputLine> read_input(const std::string& path) {
  if (path == "-") return lcsh::batch::read_jsonl(std::cin);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return lcsh::batch::read_jsonl(in);
}

/// Prototype-copying factory around a scripted mock.
lcsh::batch::SuggesterFactory mock_factory(const std::string& script_path) {
  auto proto = std::make_shared<lcsh::MockSuggester>(lcsh::MockSuggester::from_file(script_path));
  return [proto] { return std::make_unique<lcsh::MockSuggester>(*proto); };
}

lcsh::batch::SuggesterFactory http_factory() {
  auto cfg = lcsh::LlmEndpointConfig::from_env();
  cfg.validate();
  return [cfg] {
    return std::make_unique<lcsh::HttpChatSuggester>(cfg, lcsh::PromptTemplates::defaults());
  };
}

std::string script_from(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* v = std::getenv("LCSH_MOCK_SCRIPT"); v && *v) return v;
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Validate and recommend Library of Congress Subject Headings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", LCSH_VERSION);

  // validate
  auto* validate = app.add_subcommand("validate", "Validate listed terms for each record");
  LookupOptions validate_lookup;
  std::string v_in, v_out, v_format = "json", v_report;
  int v_workers = 4;
  validate->add_option("--in", v_in, "Input records, one JSON object per line ('-' for stdin)")->required();
  validate->add_option("--out", v_out, "Output file ('-' for stdout)")->required();
  validate->add_option("--format", v_format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  validate->add_option("--workers", v_workers, "Worker threads")->check(CLI::Range(1, 64));
  validate->add_option("--report", v_report, "Write the run summary here instead of stderr");
  add_lookup_options(validate, validate_lookup);

  // recommend
  auto* recommend = app.add_subcommand("recommend", "Run the suggest-validate-refine loop per record");
  LookupOptions recommend_lookup;
  std::string r_in, r_out, r_suggester, r_script, r_report;
  int r_workers = 4;
  std::optional<int> r_max_rounds;
  recommend->add_option("--in", r_in, "Input records, one JSON object per line ('-' for stdin)")->required();
  recommend->add_option("--out", r_out, "Output file ('-' for stdout)")->required();
  recommend->add_option("--suggester", r_suggester, "Suggester backend")
      ->required()
      ->check(CLI::IsMember({"mock", "http"}));
  recommend->add_option("--script", r_script, "Mock suggester script (JSON)");
  recommend->add_option("--max-rounds", r_max_rounds, "Maximum rounds")->check(CLI::Range(1, 10));
  recommend->add_option("--workers", r_workers, "Worker threads")->check(CLI::Range(1, 64));
  recommend->add_option("--report", r_report, "Write the run summary here instead of stderr");
  add_lookup_options(recommend, recommend_lookup);

  // record-fixtures
  auto* record = app.add_subcommand("record-fixtures", "Record lookups for a query list");
  LookupOptions record_lookup;
  std::string q_file;
  record->add_option("--queries", q_file, "Query list, one per line")->required();
  add_lookup_options(record, record_lookup);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  LookupOptions serve_lookup;
  std::string s_host = "127.0.0.1", s_profile = "test", s_script, s_token;
  int s_port = 8745;
  std::vector<std::string> s_origins;
  serve->add_option("--host", s_host, "Bind address");
  serve->add_option("--port", s_port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--profile", s_profile, "test: replay fixtures and mock suggester")
      ->check(CLI::IsMember({"test", "live"}));
  serve->add_option("--script", s_script, "Mock suggester script for the test profile");
  serve->add_option("--token", s_token, "Shared token required in X-LCSH-Token");
  serve->add_option("--cors-origin", s_origins, "Allowed browser origin (repeatable)");
  add_lookup_options(serve, serve_lookup);

  // mcp
  auto* mcp = app.add_subcommand("mcp", "Run the MCP server over stdio");
  LookupOptions mcp_lookup;
  add_lookup_options(mcp, mcp_lookup);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*validate) {
      const auto cfg = lookup_config(validate_lookup);
      lcsh::loc::LocClient client(cfg);
      const auto input = read_input(v_in);
      lcsh::batch::BatchOptions options;
      options.workers = v_workers;
      const auto report = lcsh::batch::run_validate(input, client, options);
      const auto format = v_format == "csv" ? lcsh::batch::Format::Csv : lcsh::batch::Format::Json;
      write_file(v_out, lcsh::batch::render_validate(report, format));
      emit_report(report, v_report);
      for (const auto& r : report.records) {
        if (r.error) std::cerr << "line " << r.line << ": " << *r.error << "\n";
      }
      return report.ok() ? kExitOk : kExitFailure;
    }

    if (*recommend) {
      lcsh::batch::SuggesterFactory factory;
      if (r_suggester == "mock") {
        const auto script = script_from(r_script);
        if (script.empty()) {
          std::cerr << "recommend: --suggester mock needs --script\n";
          return kExitUsage;
        }
        factory = mock_factory(script);
      } else {
        factory = http_factory();
      }
      const auto cfg = lookup_config(recommend_lookup);
      lcsh::loc::LocClient client(cfg);
      const auto input = read_input(r_in);
      lcsh::batch::BatchOptions options;
      options.workers = r_workers;
      if (r_max_rounds) options.session.max_rounds = *r_max_rounds;
      const auto report = lcsh::batch::run_recommend(input, client, factory, options);
      write_file(r_out, lcsh::batch::render_recommend(report));
      emit_report(report, r_report);
      for (const auto& r : report.records) {
        if (r.error) std::cerr << "line " << r.line << ": " << *r.error << "\n";
      }
      return report.ok() ? kExitOk : kExitFailure;
    }

    if (*record) {
      if (record_lookup.fixtures.empty() && !std::getenv("LCSH_FIXTURE_DIR")) {
        std::cerr << "record-fixtures: --fixtures is required\n";
        return kExitUsage;
      }
      const auto cfg = lookup_config(record_lookup, lcsh::loc::Mode::Record);
      lcsh::loc::LocClient client(cfg);
      std::ifstream in(q_file);
      if (!in) throw std::runtime_error("cannot read " + q_file);
      const auto queries = lcsh::batch::read_query_list(in);
      const auto summary = lcsh::batch::record_fixtures(queries, client, std::cerr);
      std::cerr << "recorded " << summary.queries << " queries, " << summary.failures
                << " failures\n";
      return summary.failures == 0 ? kExitOk : kExitFailure;
    }

    if (*serve) {
      lcsh::api::ApiConfig api_cfg;
      api_cfg.host = s_host;
      api_cfg.port = s_port;
      api_cfg.profile = s_profile;
      api_cfg.cors_origins = s_origins;
      if (!s_token.empty()) api_cfg.shared_token = s_token;

      lcsh::api::SuggesterFactory factory;
      std::optional<lcsh::loc::Mode> mode;
      if (s_profile == "test") {
        mode = lcsh::loc::Mode::Replay;
        if (!serve_lookup.mode.empty() && serve_lookup.mode != "replay") {
          std::cerr << "serve: the test profile always replays fixtures\n";
          return kExitUsage;
        }
        const auto script = script_from(s_script);
        if (!script.empty()) factory = mock_factory(script);
      } else {
        factory = http_factory();
      }
      if (!factory) {
        factory = []() -> std::unique_ptr<lcsh::Suggester> {
          throw lcsh::Error(lcsh::Errc::SuggesterError, "no suggester configured");
        };
      }
      const auto cfg = lookup_config(serve_lookup, mode);
      lcsh::loc::LocClient client(cfg);
      lcsh::api::ApiService service(client, factory, api_cfg);
      lcsh::api::ApiServer server(service);
      const int port = server.bind(s_host, s_port);
      if (port < 0) {
        std::cerr << "serve: cannot bind " << s_host << ":" << s_port << "\n";
        return kExitFailure;
      }
      std::cerr << "listening on http://" << s_host << ":" << port << " (profile " << s_profile
                << ", lookups " << lcsh::loc::mode_name(cfg.mode) << ")\n";
      server.run();
      return kExitOk;
    }

    if (*mcp) {
      const auto cfg = lookup_config(mcp_lookup);
      lcsh::loc::LocClient client(cfg);
      lcsh::mcp::McpServer server(client);
      std::ios::sync_with_stdio(false);
      server.serve(std::cin, std::cout);
      return kExitOk;
    }
  } catch (const lcsh::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == lcsh::Errc::InvalidConfig || e.code() == lcsh::Errc::AuthError
               ? kExitUsage
               : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
