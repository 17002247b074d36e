// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsh/json_io.hpp"

#include "lcsh/errors.hpp"

#include <cstdio>

namespace lcsh::io {

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

json to_json(const SimilarityScore& s) {
  return {{"value", format_score(s.value)},
          {"char_component", format_score(s.char_component)},
          {"token_component", format_score(s.token_component)}};
}

json to_json(const CandidateTerm& c) {
  json j = {{"text", c.text}, {"round", c.round}};
  if (c.rationale) j["rationale"] = *c.rationale;
  return j;
}

json to_json(const ValidationOutcome& o) {
  json matches = json::array();
  for (const auto& m : o.matches) {
    matches.push_back({{"uri", m.uri},
                       {"authorized_label", m.authorized_label},
                       {"matched_label", m.matched_label},
                       {"score", to_json(m.score)}});
  }
  json j = {{"candidate", to_json(o.candidate)},
            {"status", status_name(o.status)},
            {"matches", matches}};
  if (o.resolved_uri) j["resolved_uri"] = *o.resolved_uri;
  if (o.authorized_label) j["authorized_label"] = *o.authorized_label;
  if (o.error) j["error"] = *o.error;
  return j;
}

json to_json(const RecommendationSet& r) {
  json controlled = json::array();
  for (const auto& c : r.controlled) {
    controlled.push_back(
        {{"heading", c.heading}, {"uri", c.uri}, {"link", c.uri}, {"justification", c.justification}});
  }
  json audit = json::array();
  for (const auto& round : r.audit) {
    json outcomes = json::array();
    for (const auto& o : round) outcomes.push_back(to_json(o));
    audit.push_back(outcomes);
  }
  return {{"controlled", controlled},
          {"uncontrolled", r.uncontrolled},
          {"rounds_used", r.rounds_used},
          {"audit", audit}};
}

json to_json(const FeedbackContext& f) {
  json entries = json::array();
  for (const auto& e : f.entries) {
    json alts = json::array();
    for (const auto& a : e.alternatives) {
      alts.push_back({{"label", a.label}, {"uri", a.uri}, {"score", format_score(a.score)}});
    }
    json j = {{"candidate", e.candidate},
              {"status", status_name(e.status)},
              {"alternatives", alts},
              {"broader", e.broader},
              {"narrower", e.narrower},
              {"related", e.related}};
    if (e.authorized_form) j["authorized_form"] = *e.authorized_form;
    if (e.uri) j["uri"] = *e.uri;
    entries.push_back(j);
  }
  return {{"round", f.round}, {"entries", entries}};
}

json to_json(const loc::SuggestHit& h) {
  return {{"label", h.label},
          {"authorized_label", h.authorized_label},
          {"uri", h.uri},
          {"match_kind", loc::match_kind_name(h.match_kind)}};
}

json to_json(const loc::AuthorityRecord& r) {
  auto links = [](const std::vector<loc::LinkedTerm>& terms) {
    json out = json::array();
    for (const auto& t : terms) out.push_back({{"uri", t.uri}, {"label", t.label}});
    return out;
  };
  return {{"uri", r.uri},
          {"authorized_label", r.authorized_label},
          {"variant_labels", r.variant_labels},
          {"broader", links(r.broader)},
          {"narrower", links(r.narrower)},
          {"related", links(r.related)},
          {"deprecated", r.deprecated}};
}

json validation_result(const ValidationOutcome& o, std::size_t max_alternatives) {
  json alts = json::array();
  for (const auto& m : o.matches) {
    if (alts.size() >= max_alternatives) break;
    alts.push_back({{"label", m.authorized_label}, {"uri", m.uri}, {"score", format_score(m.score.value)}});
  }
  json j = {{"term", o.candidate.text}, {"status", status_name(o.status)}, {"alternatives", alts}};
  if (o.authorized_label) j["authorized_label"] = *o.authorized_label;
  if (o.resolved_uri) j["uri"] = *o.resolved_uri;
  if (o.error) j["error"] = *o.error;
  return j;
}

BibDescription bib_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(Errc::InvalidBib, "invalid bib: expected an object");
  auto text = [&](const char* key) -> std::optional<std::string> {
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
      throw Error(Errc::InvalidBib, std::string("invalid bib: ") + key + " must be a string");
    }
    return it->get<std::string>();
  };
  BibDescription bib;
  bib.title = text("title").value_or("");
  if (auto it = doc.find("contributors"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw Error(Errc::InvalidBib, "invalid bib: contributors must be a list");
    for (const auto& c : *it) {
      if (!c.is_string()) throw Error(Errc::InvalidBib, "invalid bib: contributor must be a string");
      bib.contributors.push_back(c.get<std::string>());
    }
  }
  bib.summary = text("summary");
  bib.table_of_contents = text("table_of_contents");
  bib.language_of_work = text("language_of_work");
  bib.notes = text("notes");
  bib.validate();
  return bib;
}

void apply_session_overrides(const json& overrides, SessionConfig& cfg) {
  if (overrides.is_null()) return;
  if (!overrides.is_object()) throw Error(Errc::InvalidConfig, "config must be an object");
  auto integer = [&](const char* key, int& dst) {
    if (!overrides.contains(key)) return;
    if (!overrides[key].is_number_integer()) {
      throw Error(Errc::InvalidConfig, std::string(key) + " must be an integer");
    }
    dst = overrides[key].get<int>();
  };
  auto real = [&](const char* key, double& dst) {
    if (!overrides.contains(key)) return;
    if (!overrides[key].is_number()) {
      throw Error(Errc::InvalidConfig, std::string(key) + " must be a number");
    }
    dst = overrides[key].get<double>();
  };
  integer("max_rounds", cfg.max_rounds);
  integer("max_controlled", cfg.max_controlled);
  integer("max_uncontrolled", cfg.max_uncontrolled);
  real("partial_threshold", cfg.partial_threshold);
  real("accept_threshold", cfg.accept_threshold);
  cfg.validate();
}

}  // namespace lcsh::io
