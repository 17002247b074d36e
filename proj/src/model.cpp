// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsh/model.hpp"

#include "lcsh/errors.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <numeric>
#include <set>

namespace lcsh {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyHeading: return "EmptyHeading";
    case Errc::EmptyComponent: return "EmptyComponent";
    case Errc::EmptyQuery: return "EmptyQuery";
    case Errc::ForeignUri: return "ForeignUri";
    case Errc::NetworkError: return "NetworkError";
    case Errc::ServiceError: return "ServiceError";
    case Errc::MalformedResponse: return "MalformedResponse";
    case Errc::ReplayMiss: return "ReplayMiss";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::InvalidBib: return "InvalidBib";
    case Errc::SuggesterError: return "SuggesterError";
    case Errc::EmptySuggestion: return "EmptySuggestion";
    case Errc::UnscriptedInput: return "UnscriptedInput";
    case Errc::EndpointError: return "EndpointError";
    case Errc::MalformedLlmOutput: return "MalformedLlmOutput";
    case Errc::AuthError: return "AuthError";
  }
  return "Unknown";
}

std::u32string to_u32(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  const auto* data = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto length = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(data, i, length, c);
    out.push_back(c < 0 ? U'\uFFFD' : static_cast<char32_t>(c));
  }
  return out;
}

std::string to_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
    if (error) {
      n = 0;
      U8_APPEND_UNSAFE(buf, n, 0xFFFD);
    }
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
  }
  return out;
}

namespace {

bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

bool is_mark(UChar32 c) { return (U_GET_GC_MASK(c) & U_GC_M_MASK) != 0; }

std::u32string collapse(std::u32string_view s) {
  std::u32string out;
  bool pending = false;
  for (char32_t c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(U' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string_view> split_delimited(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(kSubdivisionDelimiter, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + kSubdivisionDelimiter.size();
  }
}

}  // namespace

std::string collapse_whitespace(std::string_view s) { return to_utf8(collapse(to_u32(s))); }

std::string normalize_label(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfd = icu::Normalizer2::getNFDInstance(status);
  icu::UnicodeString text = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  text.toLower(icu::Locale::getRoot());
  icu::UnicodeString decomposed = nfd->normalize(text, status);
  if (U_FAILURE(status)) decomposed = text;

  std::u32string stripped;
  stripped.reserve(static_cast<std::size_t>(decomposed.length()));
  for (int32_t i = 0; i < decomposed.length();) {
    UChar32 c = decomposed.char32At(i);
    i += U16_LENGTH(c);
    if (!is_mark(c)) stripped.push_back(static_cast<char32_t>(c));
  }
  return to_utf8(collapse(stripped));
}

HeadingString parse_heading(std::string_view s) {
  if (collapse_whitespace(s).empty()) {
    throw Error(Errc::EmptyHeading, "heading is empty");
  }
  HeadingString h;
  h.raw = std::string(s);
  for (auto part : split_delimited(s)) {
    std::string text = collapse_whitespace(part);
    if (text.empty()) {
      throw Error(Errc::EmptyComponent,
                  "empty component in heading '" + std::string(s) + "'");
    }
    Component c;
    c.text = std::move(text);
    c.kind = h.components.empty() ? ComponentKind::Main : ComponentKind::Subdivision;
    h.components.push_back(std::move(c));
  }
  return h;
}

std::string serialize_heading(const HeadingString& h) {
  std::string out;
  for (const auto& c : h.components) {
    if (!out.empty()) out.append(kSubdivisionDelimiter);
    out.append(c.text);
  }
  return out;
}

std::string canonical_heading_form(std::string_view raw) {
  std::string out;
  bool first = true;
  for (auto part : split_delimited(raw)) {
    if (!first) out.append(kSubdivisionDelimiter);
    first = false;
    out.append(collapse_whitespace(part));
  }
  return out;
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<std::u32string> label_tokens(std::u32string_view normalized) {
  std::vector<std::u32string> tokens;
  std::u32string current;
  for (char32_t c : normalized) {
    if (is_space(c) || u_ispunct(static_cast<UChar32>(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

SimilarityScore similarity(std::string_view a, std::string_view b) {
  const std::u32string na = to_u32(normalize_label(a));
  const std::u32string nb = to_u32(normalize_label(b));

  SimilarityScore score;
  const std::size_t longest = std::max(na.size(), nb.size());
  score.char_component =
      longest == 0 ? 1.0
                   : 1.0 - static_cast<double>(edit_distance(na, nb)) /
                               static_cast<double>(longest);

  auto ta = label_tokens(na);
  auto tb = label_tokens(nb);
  std::set<std::u32string> sa(ta.begin(), ta.end());
  std::set<std::u32string> sb(tb.begin(), tb.end());
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  const std::size_t unified = sa.size() + sb.size() - common;
  score.token_component =
      unified == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(unified);

  score.value = 0.5 * score.char_component + 0.5 * score.token_component;
  return score;
}

std::vector<RankedMatch> rank_matches(std::string_view candidate,
                                      const std::vector<LabelRef>& labels) {
  std::vector<RankedMatch> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    out.push_back({l.id, l.label, similarity(candidate, l.label)});
  }
  std::sort(out.begin(), out.end(), [](const RankedMatch& x, const RankedMatch& y) {
    if (x.score.value != y.score.value) return x.score.value > y.score.value;
    if (x.label != y.label) return x.label < y.label;
    return x.id < y.id;
  });
  return out;
}

}  // namespace lcsh
