// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lcsh/pipeline.hpp"
#include "lcsh/transport.hpp"

#include <json.hpp>

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

namespace lcsh {

/// Scripted suggester for hermetic tests. The script maps a normalized title
/// to per-round candidate lists; refine() always answers with round 1.
class MockSuggester : public Suggester {
 public:
  using Script = std::map<std::string, std::vector<std::vector<CandidateTerm>>>;

  explicit MockSuggester(Script script);

  /// {"Title": [["term", {"term": "...", "rationale": "..."}], [...]]}
  static MockSuggester from_json(const nlohmann::json& doc);
  static MockSuggester from_file(const std::string& path);

  std::vector<CandidateTerm> suggest_initial(const BibDescription& bib) override;
  std::vector<CandidateTerm> refine(const BibDescription& bib,
                                    const FeedbackContext& feedback) override;

 protected:
  const std::vector<std::vector<CandidateTerm>>& rounds_for(const BibDescription& bib) const;

 private:
  Script script_;
};

/// Mock whose refinement depends on the feedback it receives: the key is a
/// status-count signature such as "ExactAuthorized=1,NotFound=2"; "*" is the
/// fallback.
class FeedbackKeyedMockSuggester : public Suggester {
 public:
  using Refinements = std::map<std::string, std::vector<CandidateTerm>>;

  FeedbackKeyedMockSuggester(std::map<std::string, std::vector<CandidateTerm>> initial,
                             std::map<std::string, Refinements> refinements);

  static std::string signature(const FeedbackContext& feedback);

  std::vector<CandidateTerm> suggest_initial(const BibDescription& bib) override;
  std::vector<CandidateTerm> refine(const BibDescription& bib,
                                    const FeedbackContext& feedback) override;

 private:
  std::map<std::string, std::vector<CandidateTerm>> initial_;
  std::map<std::string, Refinements> refinements_;
};

/// Seeds round 0 with pre-existing terms after the wrapped suggester's list.
class SeededSuggester : public Suggester {
 public:
  SeededSuggester(Suggester& inner, std::vector<std::string> seeds);
  std::vector<CandidateTerm> suggest_initial(const BibDescription& bib) override;
  std::vector<CandidateTerm> refine(const BibDescription& bib,
                                    const FeedbackContext& feedback) override;

 private:
  Suggester& inner_;
  std::vector<std::string> seeds_;
};

struct PromptTemplates {
  std::string system;
  std::string initial_template;  // {title} {contributors} {summary} {toc}
  std::string refine_template;   // the above plus {previous_candidates} {feedback}
  std::string format_reminder;

  static PromptTemplates defaults();
};

/// Single-pass `{name}` substitution; inserted values are never rescanned.
/// Throws std::invalid_argument if a marker has no value.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

struct LlmEndpointConfig {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  std::string model_name;
  double temperature = 0.0;
  int max_retries = 2;
  std::chrono::milliseconds timeout{60000};
  std::chrono::milliseconds retry_backoff{500};

  void validate() const;
  /// LCSH_LLM_BASE_URL, LCSH_LLM_API_KEY, LCSH_LLM_MODEL.
  static LlmEndpointConfig from_env();
};

/// Extracts candidates from a model reply: strips code fences, locates the
/// JSON array, accepts strings or {term, rationale} objects. Over-long lists
/// are truncated to kMaxCandidates. Throws Error{MalformedLlmOutput}.
std::vector<CandidateTerm> parse_llm_candidates(std::string_view reply,
                                                std::vector<std::string>* warnings = nullptr);

/// One line per entry, sublines for alternatives and hierarchy; at most 7
/// lines per entry.
std::string render_feedback(const FeedbackContext& feedback);

/// OpenAI-style chat-completion adapter.
class HttpChatSuggester : public Suggester {
 public:
  HttpChatSuggester(LlmEndpointConfig cfg, PromptTemplates templates,
                    std::shared_ptr<Transport> transport = nullptr);

  std::vector<CandidateTerm> suggest_initial(const BibDescription& bib) override;
  std::vector<CandidateTerm> refine(const BibDescription& bib,
                                    const FeedbackContext& feedback) override;

  /// Warnings raised while parsing replies (e.g. truncation).
  std::vector<std::string> warnings() const;

 private:
  std::vector<CandidateTerm> converse(const std::string& user_prompt);
  std::string complete(const nlohmann::json& messages);

  LlmEndpointConfig cfg_;
  PromptTemplates templates_;
  std::shared_ptr<Transport> transport_;
  mutable std::mutex mutex_;
  std::vector<std::string> warnings_;
};

}  // namespace lcsh
