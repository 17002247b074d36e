// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lcsh/loc_client.hpp"
#include "lcsh/pipeline.hpp"

#include <json.hpp>

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lcsh::batch {

/// One input line. `record` is absent when the line could not be parsed.
struct InputLine {
  std::size_t line = 0;  // 1-based
  std::optional<nlohmann::json> record;
  std::string error;
};

/// Reads line-oriented JSON records; blank lines are skipped.
std::vector<InputLine> read_jsonl(std::istream& in);

struct Summary {
  std::size_t records = 0;
  std::size_t exact = 0;
  std::size_t variant = 0;
  std::size_t partial = 0;
  std::size_t not_found = 0;
  std::size_t deprecated = 0;
  std::size_t errors = 0;

  void count(ValidationStatus s);
  bool operator==(const Summary&) const = default;
};

/// Result for one input line: either `result` or `error` is set.
struct RecordResult {
  std::size_t line = 0;
  std::optional<std::string> id;
  std::optional<nlohmann::json> result;
  std::optional<std::string> error;
};

struct BatchReport {
  std::vector<RecordResult> records;  // input order
  Summary summary;
  double duration_seconds = 0.0;

  bool ok() const { return summary.errors == 0; }
  /// Summary and timing; kept out of the output file so it stays byte-stable.
  nlohmann::json summary_json() const;
};

struct BatchOptions {
  int workers = 4;
  SessionConfig session;  // degradable_lookups is forced off
};

using SuggesterFactory = std::function<std::unique_ptr<Suggester>()>;

/// Records are {id, terms: [text]}.
BatchReport run_validate(const std::vector<InputLine>& input, loc::LocClient& client,
                         const BatchOptions& options);

/// Records are {id, title, contributors?, summary?, table_of_contents?, ...,
/// terms?}; `terms` are pre-existing headings seeded into round 0.
BatchReport run_recommend(const std::vector<InputLine>& input, loc::LocClient& client,
                          const SuggesterFactory& suggesters, const BatchOptions& options);

enum class Format { Json, Csv };

/// Flat list of per-term validation results with error entries inline.
std::string render_validate(const BatchReport& report, Format format);
/// List of {line, id, recommendation} or {line, id?, error}.
std::string render_recommend(const BatchReport& report);

/// RFC 4180 field quoting.
std::string csv_field(std::string_view value);

struct RecordingSummary {
  std::size_t queries = 0;
  std::size_t failures = 0;
};

/// Issues the lookups a session, the API and the MCP tools would make for
/// each query so that Replay mode can answer them. Failures are logged and
/// counted; the fixtures already written remain valid.
RecordingSummary record_fixtures(const std::vector<std::string>& queries, loc::LocClient& client,
                                 std::ostream& log);

/// Non-blank, non-comment ('#') lines.
std::vector<std::string> read_query_list(std::istream& in);

}  // namespace lcsh::batch
