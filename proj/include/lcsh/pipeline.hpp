// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lcsh/loc_client.hpp"
#include "lcsh/model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lcsh {

struct BibDescription {
  std::string title;
  std::vector<std::string> contributors;
  std::optional<std::string> summary;
  std::optional<std::string> table_of_contents;
  std::optional<std::string> language_of_work;
  std::optional<std::string> notes;

  /// Throws Error{InvalidBib} when the title is blank.
  void validate() const;
};

enum class ValidationStatus { ExactAuthorized, VariantMatch, PartialMatch, Deprecated, NotFound };

std::string_view status_name(ValidationStatus s) noexcept;
std::optional<ValidationStatus> parse_status(std::string_view s) noexcept;

/// One authority entry compared against a candidate.
struct AuthorityMatch {
  std::string uri;
  std::string authorized_label;
  std::string matched_label;  // the label that was scored
  SimilarityScore score;

  bool operator==(const AuthorityMatch&) const = default;
};

struct ValidationOutcome {
  CandidateTerm candidate;
  ValidationStatus status = ValidationStatus::NotFound;
  std::vector<AuthorityMatch> matches;  // rank_matches order
  std::optional<std::string> resolved_uri;
  std::optional<std::string> authorized_label;  // set with resolved_uri
  std::optional<std::string> error;             // degraded lookup failure

  bool resolved() const {
    return status == ValidationStatus::ExactAuthorized || status == ValidationStatus::VariantMatch;
  }
  double best_score() const { return matches.empty() ? 0.0 : matches.front().score.value; }
  bool operator==(const ValidationOutcome&) const = default;
};

struct FeedbackAlternative {
  std::string label;
  std::string uri;
  double score = 0.0;

  bool operator==(const FeedbackAlternative&) const = default;
};

struct FeedbackEntry {
  std::string candidate;
  ValidationStatus status = ValidationStatus::NotFound;
  std::optional<std::string> authorized_form;
  std::optional<std::string> uri;
  std::vector<FeedbackAlternative> alternatives;  // <= 3
  std::vector<std::string> broader;               // <= 3 each
  std::vector<std::string> narrower;
  std::vector<std::string> related;

  bool operator==(const FeedbackEntry&) const = default;
};

struct FeedbackContext {
  int round = 0;  // the round these entries summarize
  std::vector<FeedbackEntry> entries;

  bool operator==(const FeedbackContext&) const = default;
};

struct ControlledHeading {
  std::string heading;
  std::string uri;
  std::string justification;

  bool operator==(const ControlledHeading&) const = default;
};

struct RecommendationSet {
  std::vector<ControlledHeading> controlled;
  std::vector<std::string> uncontrolled;
  int rounds_used = 0;
  std::vector<std::vector<ValidationOutcome>> audit;  // one list per round

  bool operator==(const RecommendationSet&) const = default;
};

struct SessionConfig {
  int max_rounds = 2;
  double partial_threshold = 0.55;
  double accept_threshold = 0.999;
  int max_controlled = 4;
  int max_uncontrolled = 5;
  /// Lookup failures become NotFound outcomes with an error annotation.
  bool degradable_lookups = false;

  /// Throws Error{InvalidConfig}.
  void validate() const;
};

inline constexpr std::size_t kMaxCandidates = 10;

/// The two entry points of the LLM side of the loop. Round numbers are set by
/// the caller.
class Suggester {
 public:
  virtual ~Suggester() = default;
  virtual std::vector<CandidateTerm> suggest_initial(const BibDescription& bib) = 0;
  virtual std::vector<CandidateTerm> refine(const BibDescription& bib,
                                            const FeedbackContext& feedback) = 0;
};

std::vector<ValidationOutcome> validate_candidates(const std::vector<CandidateTerm>& terms,
                                                   loc::LocClient& client,
                                                   const SessionConfig& cfg);

/// Throws std::invalid_argument on empty `outcomes`. Hierarchy labels come
/// from fetch_authority and are skipped when unavailable.
FeedbackContext build_feedback(const std::vector<ValidationOutcome>& outcomes, int round,
                               loc::LocClient& client);

RecommendationSet finalize(const std::vector<std::vector<ValidationOutcome>>& rounds,
                           const SessionConfig& cfg);

RecommendationSet run_session(const BibDescription& bib, Suggester& suggester,
                              loc::LocClient& client, const SessionConfig& cfg);

}  // namespace lcsh
