// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsh/pipeline.hpp"

#include "lcsh/errors.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace lcsh {

void BibDescription::validate() const {
  if (collapse_whitespace(title).empty()) throw Error(Errc::InvalidBib, "invalid bib: title is empty");
}

std::string_view status_name(ValidationStatus s) noexcept {
  switch (s) {
    case ValidationStatus::ExactAuthorized: return "ExactAuthorized";
    case ValidationStatus::VariantMatch: return "VariantMatch";
    case ValidationStatus::PartialMatch: return "PartialMatch";
    case ValidationStatus::Deprecated: return "Deprecated";
    case ValidationStatus::NotFound: return "NotFound";
  }
  return "NotFound";
}

std::optional<ValidationStatus> parse_status(std::string_view s) noexcept {
  for (auto st : {ValidationStatus::ExactAuthorized, ValidationStatus::VariantMatch,
                  ValidationStatus::PartialMatch, ValidationStatus::Deprecated,
                  ValidationStatus::NotFound}) {
    if (status_name(st) == s) return st;
  }
  return std::nullopt;
}

void SessionConfig::validate() const {
  if (max_rounds < 1) throw Error(Errc::InvalidConfig, "max_rounds must be >= 1");
  if (partial_threshold < 0.0 || partial_threshold > 1.0 || accept_threshold < 0.0 ||
      accept_threshold > 1.0) {
    throw Error(Errc::InvalidConfig, "thresholds must lie in [0, 1]");
  }
  if (!(partial_threshold < accept_threshold)) {
    throw Error(Errc::InvalidConfig, "partial_threshold must be below accept_threshold");
  }
  if (max_controlled < 0 || max_uncontrolled < 0) {
    throw Error(Errc::InvalidConfig, "output caps must be non-negative");
  }
}

namespace {

ValidationOutcome classify_resolved(const CandidateTerm& term, const loc::AuthorityRecord& record) {
  ValidationOutcome out;
  out.candidate = term;
  out.resolved_uri = record.uri;
  out.authorized_label = record.authorized_label;
  if (record.deprecated) {
    out.status = ValidationStatus::Deprecated;
  } else if (normalize_label(record.authorized_label) == normalize_label(term.text)) {
    out.status = ValidationStatus::ExactAuthorized;
  } else {
    out.status = ValidationStatus::VariantMatch;
  }
  return out;
}

ValidationOutcome validate_one(const CandidateTerm& term, loc::LocClient& client,
                               const SessionConfig& cfg) {
  if (auto resolution = client.resolve_label(term.text)) {
    auto record = client.fetch_authority(resolution->uri);
    auto out = classify_resolved(term, record);
    out.matches.push_back({record.uri, record.authorized_label, record.authorized_label,
                           similarity(term.text, record.authorized_label)});
    return out;
  }

  const auto hits = client.suggest(term.text);
  std::vector<LabelRef> labels;
  std::map<std::string, std::string> authorized_by_uri;
  for (const auto& hit : hits) {
    labels.push_back({hit.label, hit.uri});
    authorized_by_uri.emplace(hit.uri, hit.authorized_label);
  }
  std::vector<AuthorityMatch> matches;
  for (auto& ranked : rank_matches(term.text, labels)) {
    matches.push_back({ranked.id, authorized_by_uri[ranked.id], ranked.label, ranked.score});
  }

  ValidationOutcome out;
  const double best = matches.empty() ? 0.0 : matches.front().score.value;
  if (!matches.empty() && best >= cfg.accept_threshold) {
    out = classify_resolved(term, client.fetch_authority(matches.front().uri));
  } else {
    out.candidate = term;
    out.status = best >= cfg.partial_threshold && !matches.empty() ? ValidationStatus::PartialMatch
                                                                   : ValidationStatus::NotFound;
  }
  out.matches = std::move(matches);
  return out;
}

}  // namespace

std::vector<ValidationOutcome> validate_candidates(const std::vector<CandidateTerm>& terms,
                                                   loc::LocClient& client,
                                                   const SessionConfig& cfg) {
  std::map<std::string, ValidationOutcome> by_text;
  std::vector<ValidationOutcome> outcomes;
  outcomes.reserve(terms.size());
  for (const auto& term : terms) {
    const std::string key = normalize_label(term.text);
    auto it = by_text.find(key);
    if (it == by_text.end()) {
      ValidationOutcome computed;
      if (key.empty()) {
        computed.candidate = term;
        computed.error = "empty candidate";
      } else {
        try {
          computed = validate_one(term, client, cfg);
        } catch (const Error& e) {
          if (!cfg.degradable_lookups || !is_lookup_error(e.code())) throw;
          computed = ValidationOutcome{};
          computed.candidate = term;
          computed.error = std::string(errc_name(e.code())) + ": " + e.what();
        }
      }
      it = by_text.emplace(key, std::move(computed)).first;
    }
    ValidationOutcome out = it->second;
    out.candidate = term;
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

FeedbackContext build_feedback(const std::vector<ValidationOutcome>& outcomes, int round,
                               loc::LocClient& client) {
  if (outcomes.empty()) throw std::invalid_argument("build_feedback needs at least one outcome");
  constexpr std::size_t kTop = 3;

  FeedbackContext fb;
  fb.round = round;
  for (const auto& o : outcomes) {
    FeedbackEntry e;
    e.candidate = o.candidate.text;
    e.status = o.status;
    e.uri = o.resolved_uri;
    e.authorized_form = o.authorized_label;
    if (o.status != ValidationStatus::ExactAuthorized) {
      std::set<std::string> seen;
      for (const auto& m : o.matches) {
        if (e.alternatives.size() >= kTop) break;
        if (!seen.insert(m.uri).second) continue;
        e.alternatives.push_back({m.authorized_label, m.uri, m.score.value});
      }
      std::optional<std::string> best = o.resolved_uri;
      if (!best && !o.matches.empty()) best = o.matches.front().uri;
      if (best) {
        try {
          const auto record = client.fetch_authority(*best);
          auto take = [&](const std::vector<loc::LinkedTerm>& terms, std::vector<std::string>& dst) {
            for (const auto& t : terms) {
              if (dst.size() >= kTop) break;
              if (!t.label.empty()) dst.push_back(t.label);
            }
          };
          take(record.broader, e.broader);
          take(record.narrower, e.narrower);
          take(record.related, e.related);
        } catch (const Error&) {
          // hierarchy is optional context
        }
      }
    }
    fb.entries.push_back(std::move(e));
  }
  return fb;
}

namespace {

std::string justification(const ValidationOutcome& o) {
  std::string text = "Suggested as \"" + o.candidate.text + "\" in round " +
                     std::to_string(o.candidate.round);
  if (o.candidate.rationale && !o.candidate.rationale->empty()) {
    text += ": " + *o.candidate.rationale;
  }
  text += ". Validated against LCSH as " + std::string(status_name(o.status));
  if (o.status == ValidationStatus::VariantMatch) {
    text += "; replaced with the authorized form \"" + o.authorized_label.value_or("") + "\"";
  }
  return text + ".";
}

}  // namespace

RecommendationSet finalize(const std::vector<std::vector<ValidationOutcome>>& rounds,
                           const SessionConfig& cfg) {
  struct Pick {
    const ValidationOutcome* outcome;
    std::size_t round;
  };
  std::map<std::string, Pick> by_uri;
  std::set<std::string> resolved_texts;
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    for (const auto& o : rounds[r]) {
      if (!o.resolved() || !o.resolved_uri || !o.authorized_label) continue;
      resolved_texts.insert(normalize_label(o.candidate.text));
      auto it = by_uri.find(*o.resolved_uri);
      if (it == by_uri.end() || it->second.round < r) by_uri[*o.resolved_uri] = {&o, r};
    }
  }

  std::vector<Pick> picks;
  for (const auto& [uri, pick] : by_uri) picks.push_back(pick);
  std::sort(picks.begin(), picks.end(), [](const Pick& a, const Pick& b) {
    if (a.round != b.round) return a.round > b.round;
    const double sa = a.outcome->best_score();
    const double sb = b.outcome->best_score();
    if (sa != sb) return sa > sb;
    if (*a.outcome->authorized_label != *b.outcome->authorized_label) {
      return *a.outcome->authorized_label < *b.outcome->authorized_label;
    }
    return *a.outcome->resolved_uri < *b.outcome->resolved_uri;
  });
  if (picks.size() > static_cast<std::size_t>(cfg.max_controlled)) {
    picks.resize(static_cast<std::size_t>(cfg.max_controlled));
  }

  RecommendationSet set;
  std::set<std::string> excluded = resolved_texts;
  for (const auto& pick : picks) {
    const auto& o = *pick.outcome;
    set.controlled.push_back({*o.authorized_label, *o.resolved_uri, justification(o)});
    excluded.insert(normalize_label(*o.authorized_label));
  }

  std::set<std::string> seen;
  for (auto r = rounds.rbegin(); r != rounds.rend(); ++r) {
    for (const auto& o : *r) {
      if (o.resolved()) continue;
      std::string text = normalize_label(o.candidate.text);
      if (text.empty() || excluded.count(text) || !seen.insert(text).second) continue;
      if (set.uncontrolled.size() >= static_cast<std::size_t>(cfg.max_uncontrolled)) break;
      set.uncontrolled.push_back(std::move(text));
    }
  }

  set.rounds_used = static_cast<int>(rounds.size());
  set.audit = rounds;
  return set;
}

namespace {

template <class Fn>
std::vector<CandidateTerm> call_suggester(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == Errc::SuggesterError) throw;
    throw Error(Errc::SuggesterError,
                "suggester failed (" + std::string(errc_name(e.code())) + "): " + e.what());
  } catch (const std::exception& e) {
    throw Error(Errc::SuggesterError, std::string("suggester failed: ") + e.what());
  }
}

std::vector<CandidateTerm> prepare(std::vector<CandidateTerm> terms, int round) {
  std::vector<CandidateTerm> out;
  for (auto& t : terms) {
    if (out.size() >= kMaxCandidates) break;
    t.text = collapse_whitespace(t.text);
    if (t.text.empty()) continue;
    t.round = round;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

RecommendationSet run_session(const BibDescription& bib, Suggester& suggester,
                              loc::LocClient& client, const SessionConfig& cfg) {
  bib.validate();
  cfg.validate();

  auto initial = prepare(call_suggester([&] { return suggester.suggest_initial(bib); }), 0);
  if (initial.empty()) throw Error(Errc::EmptySuggestion, "suggester returned no candidates");

  std::vector<std::vector<ValidationOutcome>> rounds;
  rounds.push_back(validate_candidates(initial, client, cfg));

  while (static_cast<int>(rounds.size()) < cfg.max_rounds) {
    const auto& last = rounds.back();
    if (std::all_of(last.begin(), last.end(), [](const auto& o) { return o.resolved(); })) break;
    const int round = static_cast<int>(rounds.size());
    const auto feedback = build_feedback(last, round - 1, client);
    auto refined =
        prepare(call_suggester([&] { return suggester.refine(bib, feedback); }), round);
    if (refined.empty()) break;
    rounds.push_back(validate_candidates(refined, client, cfg));
  }
  return finalize(rounds, cfg);
}

}  // namespace lcsh
