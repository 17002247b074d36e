// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lcsh {

inline constexpr std::string_view kSubdivisionDelimiter = "--";

enum class ComponentKind { Main, Subdivision };

/// Finer classification of a subdivision. The heading string alone cannot
/// tell these apart, so parsing always yields Unknown.
enum class SubdivisionKind { Unknown, Topical, Geographic, Chronological, Form };

struct Component {
  std::string text;
  ComponentKind kind = ComponentKind::Main;
  SubdivisionKind subdivision = SubdivisionKind::Unknown;

  bool operator==(const Component&) const = default;
};

/// A subject heading in display form, e.g. "China--History--20th century".
struct HeadingString {
  std::string raw;
  std::vector<Component> components;

  const Component& main() const { return components.front(); }

  /// Equality is structural; `raw` keeps the caller's spelling.
  bool operator==(const HeadingString& other) const {
    return components == other.components;
  }
};

struct CandidateTerm {
  std::string text;
  int round = 0;  // 0 = initial suggestion, >= 1 = refinement round
  std::optional<std::string> rationale;

  bool operator==(const CandidateTerm&) const = default;
};

struct SimilarityScore {
  double value = 0.0;
  double char_component = 0.0;
  double token_component = 0.0;

  bool operator==(const SimilarityScore&) const = default;
};

struct RankedMatch {
  std::string id;
  std::string label;
  SimilarityScore score;
};

struct LabelRef {
  std::string label;
  std::string id;
};

/// Lowercase, strip combining marks after canonical decomposition, collapse
/// whitespace runs to one space and trim. Idempotent.
std::string normalize_label(std::string_view s);

/// Trim and collapse whitespace runs, without touching case or marks.
std::string collapse_whitespace(std::string_view s);

/// Splits on "--". Throws Error{EmptyHeading} or Error{EmptyComponent}.
HeadingString parse_heading(std::string_view s);

std::string serialize_heading(const HeadingString& h);

/// `raw` with whitespace collapsed and removed around delimiters; equals
/// serialize_heading(h) for every parsed heading.
std::string canonical_heading_form(std::string_view raw);

/// Levenshtein distance over Unicode code points.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

/// Tokens of a normalized label: maximal runs of code points that are neither
/// whitespace nor punctuation.
std::vector<std::u32string> label_tokens(std::u32string_view normalized);

std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view s);

/// Equal-weight blend of normalized Levenshtein similarity and token-set
/// Jaccard, both over normalize_label forms.
SimilarityScore similarity(std::string_view a, std::string_view b);

/// Sorted by score descending, then label ascending, then id ascending.
std::vector<RankedMatch> rank_matches(std::string_view candidate,
                                      const std::vector<LabelRef>& labels);

}  // namespace lcsh
