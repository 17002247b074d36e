// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lcsh/loc_client.hpp"
#include "lcsh/pipeline.hpp"

#include <json.hpp>

#include <string>

// Wire forms shared by the API, the MCP tools and the batch CLI. Scores are
// decimal strings with four fractional digits so bodies are byte-stable.
namespace lcsh::io {

using nlohmann::json;

std::string format_score(double v);

json to_json(const SimilarityScore& s);
json to_json(const CandidateTerm& c);
json to_json(const ValidationOutcome& o);
json to_json(const RecommendationSet& r);
json to_json(const FeedbackContext& f);
json to_json(const loc::SuggestHit& h);
json to_json(const loc::AuthorityRecord& r);

/// Compact per-term verdict: {term, status, authorized_label?, uri?,
/// alternatives: [{label, uri, score}], error?}.
json validation_result(const ValidationOutcome& o, std::size_t max_alternatives = 3);

/// Reads the BibDescription fields of `doc`. Throws Error{InvalidBib}.
BibDescription bib_from_json(const json& doc);

/// Applies the optional keys of `overrides` to `cfg`. Throws
/// Error{InvalidConfig} on wrong types.
void apply_session_overrides(const json& overrides, SessionConfig& cfg);

}  // namespace lcsh::io
