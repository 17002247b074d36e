// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsh/suggesters.hpp"

#include "lcsh/errors.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace lcsh {

using nlohmann::json;

namespace {

CandidateTerm candidate_from_json(const json& item) {
  CandidateTerm c;
  if (item.is_string()) {
    c.text = item.get<std::string>();
  } else if (item.is_object() && item.contains("term") && item["term"].is_string()) {
    c.text = item["term"].get<std::string>();
    if (item.contains("rationale") && item["rationale"].is_string()) {
      c.rationale = item["rationale"].get<std::string>();
    }
  } else {
    throw std::invalid_argument("candidate must be a string or {term, rationale}");
  }
  return c;
}

}  // namespace

MockSuggester::MockSuggester(Script script) {
  for (auto& [title, rounds] : script) script_[normalize_label(title)] = std::move(rounds);
}

MockSuggester MockSuggester::from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("mock script must be an object");
  Script script;
  for (const auto& [title, rounds] : doc.items()) {
    auto& dst = script[title];
    for (const auto& round : rounds) {
      std::vector<CandidateTerm> terms;
      for (const auto& item : round) terms.push_back(candidate_from_json(item));
      dst.push_back(std::move(terms));
    }
  }
  return MockSuggester(std::move(script));
}

MockSuggester MockSuggester::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read mock script " + path);
  return from_json(json::parse(in));
}

const std::vector<std::vector<CandidateTerm>>& MockSuggester::rounds_for(
    const BibDescription& bib) const {
  auto it = script_.find(normalize_label(bib.title));
  if (it == script_.end()) {
    throw Error(Errc::UnscriptedInput, "no script for title '" + bib.title + "'");
  }
  return it->second;
}

std::vector<CandidateTerm> MockSuggester::suggest_initial(const BibDescription& bib) {
  const auto& rounds = rounds_for(bib);
  return rounds.empty() ? std::vector<CandidateTerm>{} : rounds.front();
}

std::vector<CandidateTerm> MockSuggester::refine(const BibDescription& bib,
                                                 const FeedbackContext&) {
  const auto& rounds = rounds_for(bib);
  if (rounds.size() < 2) {
    throw Error(Errc::UnscriptedInput, "no refinement scripted for '" + bib.title + "'");
  }
  return rounds[1];
}

FeedbackKeyedMockSuggester::FeedbackKeyedMockSuggester(
    std::map<std::string, std::vector<CandidateTerm>> initial,
    std::map<std::string, Refinements> refinements) {
  for (auto& [t, v] : initial) initial_[normalize_label(t)] = std::move(v);
  for (auto& [t, v] : refinements) refinements_[normalize_label(t)] = std::move(v);
}

std::string FeedbackKeyedMockSuggester::signature(const FeedbackContext& feedback) {
  std::map<ValidationStatus, int> counts;
  for (const auto& e : feedback.entries) ++counts[e.status];
  std::string out;
  for (const auto& [status, n] : counts) {
    if (!out.empty()) out += ",";
    out += std::string(status_name(status)) + "=" + std::to_string(n);
  }
  return out;
}

std::vector<CandidateTerm> FeedbackKeyedMockSuggester::suggest_initial(const BibDescription& bib) {
  auto it = initial_.find(normalize_label(bib.title));
  if (it == initial_.end()) throw Error(Errc::UnscriptedInput, "no script for '" + bib.title + "'");
  return it->second;
}

std::vector<CandidateTerm> FeedbackKeyedMockSuggester::refine(const BibDescription& bib,
                                                              const FeedbackContext& feedback) {
  auto it = refinements_.find(normalize_label(bib.title));
  if (it == refinements_.end()) {
    throw Error(Errc::UnscriptedInput, "no refinement for '" + bib.title + "'");
  }
  if (auto hit = it->second.find(signature(feedback)); hit != it->second.end()) return hit->second;
  if (auto any = it->second.find("*"); any != it->second.end()) return any->second;
  throw Error(Errc::UnscriptedInput, "no refinement for signature " + signature(feedback));
}

SeededSuggester::SeededSuggester(Suggester& inner, std::vector<std::string> seeds)
    : inner_(inner), seeds_(std::move(seeds)) {}

std::vector<CandidateTerm> SeededSuggester::suggest_initial(const BibDescription& bib) {
  auto terms = inner_.suggest_initial(bib);
  std::set<std::string> seen;
  for (const auto& t : terms) seen.insert(normalize_label(t.text));
  for (const auto& s : seeds_) {
    if (seen.insert(normalize_label(s)).second) {
      terms.push_back({s, 0, std::string("pre-existing term on the record")});
    }
  }
  return terms;
}

std::vector<CandidateTerm> SeededSuggester::refine(const BibDescription& bib,
                                                   const FeedbackContext& feedback) {
  return inner_.refine(bib, feedback);
}

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  t.system =
      "You are a subject cataloger assigning Library of Congress Subject Headings (LCSH). "
      "Propose headings in LCSH display form, using \"--\" between a main heading and its "
      "subdivisions. Answer only with a JSON array of objects {\"term\": string, "
      "\"rationale\": string}, at most 10 entries, most important first.";
  t.initial_template =
      "Suggest LCSH subject headings for this work.\n"
      "Title: {title}\n"
      "Contributors: {contributors}\n"
      "Summary: {summary}\n"
      "Table of contents: {toc}\n";
  t.refine_template =
      "Your previous headings for \"{title}\" were checked against the LOC Linked Data "
      "Service.\n"
      "Previous headings: {previous_candidates}\n"
      "Validation results:\n{feedback}\n"
      "Revise the list: keep validated headings, replace variants with their authorized "
      "forms, and replace unvalidated headings with authorized alternatives where one fits. "
      "Contributors: {contributors}\nSummary: {summary}\nTable of contents: {toc}\n";
  t.format_reminder =
      "Your reply could not be read. Reply with only a JSON array of {\"term\", "
      "\"rationale\"} objects and no other text.";
  return t;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        std::string name(tmpl.substr(i + 1, close - i - 1));
        bool identifier = !name.empty() && name.find_first_not_of(
                                               "abcdefghijklmnopqrstuvwxyz_") == std::string::npos;
        if (identifier) {
          auto it = values.find(name);
          if (it == values.end()) throw std::invalid_argument("no value for {" + name + "}");
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

void LlmEndpointConfig::validate() const {
  if (base_url.empty()) throw Error(Errc::InvalidConfig, "LLM base_url is empty");
  if (model_name.empty()) throw Error(Errc::InvalidConfig, "LLM model name is empty");
  if (!(temperature >= 0.0)) throw Error(Errc::InvalidConfig, "temperature must be >= 0");
  if (api_key.empty()) throw Error(Errc::AuthError, "LLM API key is missing");
}

LlmEndpointConfig LlmEndpointConfig::from_env() {
  LlmEndpointConfig cfg;
  if (const char* v = std::getenv("LCSH_LLM_BASE_URL")) cfg.base_url = v;
  if (const char* v = std::getenv("LCSH_LLM_API_KEY")) cfg.api_key = v;
  if (const char* v = std::getenv("LCSH_LLM_MODEL")) cfg.model_name = v;
  return cfg;
}

std::vector<CandidateTerm> parse_llm_candidates(std::string_view reply,
                                                std::vector<std::string>* warnings) {
  std::string_view text = reply;
  if (auto fence = text.find("```"); fence != std::string_view::npos) {
    auto body_start = text.find('\n', fence);
    auto fence_end = body_start == std::string_view::npos ? std::string_view::npos
                                                          : text.find("```", body_start);
    if (fence_end != std::string_view::npos) {
      text = text.substr(body_start + 1, fence_end - body_start - 1);
    }
  }
  auto open = text.find('[');
  auto close = text.rfind(']');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw Error(Errc::MalformedLlmOutput, "reply contains no JSON array");
  }
  json doc;
  try {
    doc = json::parse(text.substr(open, close - open + 1));
  } catch (const json::parse_error& e) {
    throw Error(Errc::MalformedLlmOutput, std::string("reply array is not JSON: ") + e.what());
  }
  std::vector<CandidateTerm> out;
  for (const auto& item : doc) {
    CandidateTerm c;
    try {
      c = candidate_from_json(item);
    } catch (const std::invalid_argument& e) {
      throw Error(Errc::MalformedLlmOutput, e.what());
    }
    c.text = collapse_whitespace(c.text);
    if (c.text.empty()) continue;
    out.push_back(std::move(c));
  }
  if (out.size() > kMaxCandidates) {
    if (warnings) {
      warnings->push_back("model returned " + std::to_string(out.size()) +
                          " candidates; kept the first " + std::to_string(kMaxCandidates));
    }
    out.resize(kMaxCandidates);
  }
  return out;
}

namespace {

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

}  // namespace

std::string render_feedback(const FeedbackContext& feedback) {
  std::ostringstream out;
  std::size_t n = 0;
  for (const auto& e : feedback.entries) {
    out << ++n << ". \"" << e.candidate << "\" status=" << status_name(e.status);
    if (e.authorized_form) out << " authorized=\"" << *e.authorized_form << "\"";
    if (e.uri) out << " uri=" << *e.uri;
    out << "\n";
    for (const auto& alt : e.alternatives) {
      out << "   alternative: \"" << alt.label << "\" score=" << two_decimals(alt.score)
          << " uri=" << alt.uri << "\n";
    }
    if (!e.broader.empty()) out << "   broader: " << join(e.broader, " | ") << "\n";
    if (!e.narrower.empty()) out << "   narrower: " << join(e.narrower, " | ") << "\n";
    if (!e.related.empty()) out << "   related: " << join(e.related, " | ") << "\n";
  }
  return out.str();
}

HttpChatSuggester::HttpChatSuggester(LlmEndpointConfig cfg, PromptTemplates templates,
                                     std::shared_ptr<Transport> transport)
    : cfg_(std::move(cfg)),
      templates_(std::move(templates)),
      transport_(transport ? std::move(transport) : std::make_shared<HttplibTransport>()) {
  cfg_.validate();
  while (!cfg_.base_url.empty() && cfg_.base_url.back() == '/') cfg_.base_url.pop_back();
}

namespace {

std::map<std::string, std::string> bib_values(const BibDescription& bib) {
  return {
      {"title", bib.title},
      {"contributors", bib.contributors.empty() ? "(none)" : join(bib.contributors, "; ")},
      {"summary", bib.summary.value_or("(none)")},
      {"toc", bib.table_of_contents.value_or("(none)")},
  };
}

}  // namespace

std::vector<CandidateTerm> HttpChatSuggester::suggest_initial(const BibDescription& bib) {
  return converse(render_template(templates_.initial_template, bib_values(bib)));
}

std::vector<CandidateTerm> HttpChatSuggester::refine(const BibDescription& bib,
                                                     const FeedbackContext& feedback) {
  auto values = bib_values(bib);
  std::vector<std::string> previous;
  for (const auto& e : feedback.entries) previous.push_back("\"" + e.candidate + "\"");
  values["previous_candidates"] = join(previous, ", ");
  values["feedback"] = render_feedback(feedback);
  return converse(render_template(templates_.refine_template, values));
}

std::vector<std::string> HttpChatSuggester::warnings() const {
  std::lock_guard lock(mutex_);
  return warnings_;
}

std::vector<CandidateTerm> HttpChatSuggester::converse(const std::string& user_prompt) {
  json messages = json::array({
      {{"role", "system"}, {"content", templates_.system}},
      {{"role", "user"}, {"content", user_prompt}},
  });
  std::string reply = complete(messages);
  std::vector<std::string> notes;
  try {
    auto terms = parse_llm_candidates(reply, &notes);
    std::lock_guard lock(mutex_);
    warnings_.insert(warnings_.end(), notes.begin(), notes.end());
    return terms;
  } catch (const Error& e) {
    if (e.code() != Errc::MalformedLlmOutput) throw;
  }
  messages.push_back({{"role", "assistant"}, {"content", reply}});
  messages.push_back({{"role", "user"}, {"content", templates_.format_reminder}});
  auto terms = parse_llm_candidates(complete(messages), &notes);
  std::lock_guard lock(mutex_);
  warnings_.insert(warnings_.end(), notes.begin(), notes.end());
  return terms;
}

std::string HttpChatSuggester::complete(const json& messages) {
  HttpRequest request;
  request.method = "POST";
  request.url = cfg_.base_url + "/chat/completions";
  request.headers["Authorization"] = "Bearer " + cfg_.api_key;
  request.headers["Content-Type"] = "application/json";
  request.timeout = cfg_.timeout;
  request.body = json{{"model", cfg_.model_name},
                      {"temperature", cfg_.temperature},
                      {"messages", messages}}
                     .dump();

  HttpResponse response;
  for (int attempt = 0;; ++attempt) {
    const bool last = attempt >= cfg_.max_retries;
    try {
      response = transport_->send(request);
    } catch (const Error& e) {
      if (last) throw Error(Errc::EndpointError, std::string("LLM endpoint unreachable: ") + e.what());
      std::this_thread::sleep_for(cfg_.retry_backoff * (1 << attempt));
      continue;
    }
    if ((response.status == 429 || response.status >= 500) && !last) {
      std::this_thread::sleep_for(cfg_.retry_backoff * (1 << attempt));
      continue;
    }
    break;
  }
  if (response.status == 401 || response.status == 403) {
    throw Error(Errc::AuthError, "LLM endpoint rejected the API key", response.status);
  }
  if (response.status < 200 || response.status >= 300) {
    throw Error(Errc::EndpointError, "LLM endpoint returned " + std::to_string(response.status),
                response.status);
  }
  try {
    auto doc = json::parse(response.body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::EndpointError, std::string("unexpected completion shape: ") + e.what());
  }
}

}  // namespace lcsh
