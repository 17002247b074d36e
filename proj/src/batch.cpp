// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsh/batch.hpp"

#include "lcsh/errors.hpp"
#include "lcsh/json_io.hpp"
#include "lcsh/suggesters.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <istream>
#include <ostream>
#include <set>
#include <thread>

namespace lcsh::batch {

using nlohmann::json;

namespace {

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  const auto count = static_cast<std::size_t>(std::max(1, workers));
  if (count == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(count, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

/// Checks the shared record envelope. Returns the id or an error message.
struct Envelope {
  std::optional<std::string> id;
  std::optional<std::string> error;
};

std::vector<Envelope> check_envelopes(const std::vector<InputLine>& input) {
  std::vector<Envelope> out(input.size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const auto& item = input[i];
    auto& env = out[i];
    if (!item.record) {
      env.error = item.error;
      continue;
    }
    const json& rec = *item.record;
    if (!rec.is_object()) {
      env.error = "record must be an object";
      continue;
    }
    auto it = rec.find("id");
    if (it == rec.end() || !it->is_string() || it->get<std::string>().empty()) {
      env.error = "record needs a non-empty string id";
      continue;
    }
    env.id = it->get<std::string>();
    if (!seen.insert(*env.id).second) env.error = "duplicate id: " + *env.id;
  }
  return out;
}

std::vector<std::string> string_list(const json& rec, const char* key) {
  std::vector<std::string> out;
  auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) return out;
  if (!it->is_array()) throw Error(Errc::InvalidBib, std::string(key) + " must be a list of strings");
  for (const auto& v : *it) {
    if (!v.is_string()) throw Error(Errc::InvalidBib, std::string(key) + " must be a list of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

template <typename Work>
BatchReport run(const std::vector<InputLine>& input, int workers, Work work) {
  const auto start = std::chrono::steady_clock::now();
  const auto envelopes = check_envelopes(input);

  BatchReport report;
  report.records.resize(input.size());
  std::vector<std::vector<ValidationStatus>> statuses(input.size());

  parallel_for(input.size(), workers, [&](std::size_t i) {
    auto& out = report.records[i];
    out.line = input[i].line;
    out.id = envelopes[i].id;
    if (envelopes[i].error) {
      out.error = envelopes[i].error;
      return;
    }
    try {
      out.result = work(*input[i].record, statuses[i]);
    } catch (const Error& e) {
      out.error = std::string(errc_name(e.code())) + ": " + e.what();
      statuses[i].clear();
    } catch (const std::exception& e) {
      out.error = e.what();
      statuses[i].clear();
    }
  });

  for (std::size_t i = 0; i < input.size(); ++i) {
    ++report.summary.records;
    if (report.records[i].error) {
      ++report.summary.errors;
      continue;
    }
    for (auto s : statuses[i]) report.summary.count(s);
  }
  report.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

json error_entry(const RecordResult& r) {
  json j = {{"line", r.line}, {"error", *r.error}};
  if (r.id) j["id"] = *r.id;
  return j;
}

}  // namespace

std::vector<InputLine> read_jsonl(std::istream& in) {
  std::vector<InputLine> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    InputLine item;
    item.line = n;
    try {
      item.record = json::parse(line);
    } catch (const json::parse_error& e) {
      item.error = "malformed line " + std::to_string(n) + ": " + e.what();
    }
    out.push_back(std::move(item));
  }
  return out;
}

void Summary::count(ValidationStatus s) {
  switch (s) {
    case ValidationStatus::ExactAuthorized: ++exact; break;
    case ValidationStatus::VariantMatch: ++variant; break;
    case ValidationStatus::PartialMatch: ++partial; break;
    case ValidationStatus::Deprecated: ++deprecated; break;
    case ValidationStatus::NotFound: ++not_found; break;
  }
}

json BatchReport::summary_json() const {
  return {{"records", summary.records},
          {"exact", summary.exact},
          {"variant", summary.variant},
          {"partial", summary.partial},
          {"not_found", summary.not_found},
          {"deprecated", summary.deprecated},
          {"errors", summary.errors},
          {"duration_seconds", duration_seconds}};
}

BatchReport run_validate(const std::vector<InputLine>& input, loc::LocClient& client,
                         const BatchOptions& options) {
  SessionConfig cfg = options.session;
  cfg.degradable_lookups = false;
  return run(input, options.workers, [&](const json& rec, std::vector<ValidationStatus>& statuses) {
    if (!rec.contains("terms") || !rec["terms"].is_array()) {
      throw Error(Errc::InvalidBib, "record needs a terms list");
    }
    const auto terms = string_list(rec, "terms");
    json results = json::array();
    for (const auto& t : terms) {
      // One lookup per term so duplicates still get their own result row.
      const auto outcome = validate_candidates({{t, 0, std::nullopt}}, client, cfg).front();
      statuses.push_back(outcome.status);
      results.push_back(io::validation_result(outcome));
    }
    return results;
  });
}

BatchReport run_recommend(const std::vector<InputLine>& input, loc::LocClient& client,
                          const SuggesterFactory& suggesters, const BatchOptions& options) {
  SessionConfig cfg = options.session;
  cfg.degradable_lookups = false;
  return run(input, options.workers, [&](const json& rec, std::vector<ValidationStatus>& statuses) {
    const BibDescription bib = io::bib_from_json(rec);
    const auto seeds = string_list(rec, "terms");
    auto inner = suggesters();
    RecommendationSet set;
    if (seeds.empty()) {
      set = run_session(bib, *inner, client, cfg);
    } else {
      SeededSuggester seeded(*inner, seeds);
      set = run_session(bib, seeded, client, cfg);
    }
    for (const auto& round : set.audit) {
      for (const auto& o : round) statuses.push_back(o.status);
    }
    return io::to_json(set);
  });
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string render_validate(const BatchReport& report, Format format) {
  if (format == Format::Json) {
    json rows = json::array();
    for (const auto& r : report.records) {
      if (r.error) {
        rows.push_back(error_entry(r));
        continue;
      }
      for (const auto& res : *r.result) {
        json row = res;
        row["id"] = *r.id;
        row["line"] = r.line;
        rows.push_back(std::move(row));
      }
    }
    return rows.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
  }

  std::string out =
      "id,line,term,status,authorized_label,uri,alternative_label,alternative_uri,"
      "alternative_score,error\r\n";
  auto row = [&](std::initializer_list<std::string_view> fields) {
    bool first = true;
    for (auto f : fields) {
      if (!first) out += ',';
      out += csv_field(f);
      first = false;
    }
    out += "\r\n";
  };
  for (const auto& r : report.records) {
    const std::string line = std::to_string(r.line);
    const std::string id = r.id.value_or("");
    if (r.error) {
      row({id, line, "", "", "", "", "", "", "", *r.error});
      continue;
    }
    for (const auto& res : *r.result) {
      const auto& alts = res["alternatives"];
      const json alt = alts.empty() ? json::object() : alts.front();
      row({id, line, res["term"].get<std::string>(), res["status"].get<std::string>(),
           res.value("authorized_label", ""), res.value("uri", ""), alt.value("label", ""),
           alt.value("uri", ""), alt.value("score", ""), res.value("error", "")});
    }
  }
  return out;
}

std::string render_recommend(const BatchReport& report) {
  json rows = json::array();
  for (const auto& r : report.records) {
    if (r.error) {
      rows.push_back(error_entry(r));
      continue;
    }
    rows.push_back({{"line", r.line}, {"id", *r.id}, {"recommendation", *r.result}});
  }
  return rows.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

std::vector<std::string> read_query_list(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto text = collapse_whitespace(line);
    if (text.empty() || text.front() == '#') continue;
    out.push_back(text);
  }
  return out;
}

RecordingSummary record_fixtures(const std::vector<std::string>& queries, loc::LocClient& client,
                                 std::ostream& log) {
  RecordingSummary summary;
  SessionConfig cfg;
  for (const auto& q : queries) {
    ++summary.queries;
    try {
      const auto outcomes = validate_candidates({{q, 0, std::nullopt}}, client, cfg);
      build_feedback(outcomes, 0, client);
      for (const auto& hit : client.suggest(q)) client.fetch_authority(hit.uri);
      const auto& o = outcomes.front();
      log << q << ": " << status_name(o.status);
      if (o.resolved_uri) log << " " << *o.resolved_uri;
      log << "\n";
    } catch (const std::exception& e) {
      ++summary.failures;
      log << q << ": error: " << e.what() << "\n";
    }
  }
  return summary;
}

}  // namespace lcsh::batch
