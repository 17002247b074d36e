// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsh/errors.hpp"
#include "lcsh/suggesters.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace lcsh;
using lcsh::testing::ScriptedTransport;
using nlohmann::json;

namespace {

Errc parse_error_code(std::string_view reply) {
  try {
    parse_llm_candidates(reply);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse error");
  return Errc::InvalidConfig;
}

HttpResponse completion(const std::string& content, int status = 200) {
  HttpResponse r;
  r.status = status;
  r.body = json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump();
  return r;
}

HttpResponse status_only(int status) {
  HttpResponse r;
  r.status = status;
  r.body = "{}";
  return r;
}

LlmEndpointConfig endpoint() {
  LlmEndpointConfig cfg;
  cfg.base_url = "http://llm.invalid/v1/";
  cfg.api_key = "sk-test";
  cfg.model_name = "test-model";
  cfg.retry_backoff = std::chrono::milliseconds(1);
  return cfg;
}

BibDescription bib() {
  BibDescription b;
  b.title = "Weaving the Web";
  b.contributors = {"Berners-Lee, Tim", "Fischetti, Mark"};
  b.summary = "The origins of the World Wide Web.";
  return b;
}

}  // namespace

TEST_SUITE("suggesters") {
  TEST_CASE("parse_llm_candidates accepts strings and objects") {
    const auto c = parse_llm_candidates(R"([" World  Wide Web ", {"term": "Internet", "rationale": "networks"}])");
    REQUIRE(c.size() == 2);
    CHECK(c[0].text == "World Wide Web");
    CHECK_FALSE(c[0].rationale.has_value());
    CHECK(c[1].text == "Internet");
    CHECK(c[1].rationale == std::optional<std::string>("networks"));
  }

  TEST_CASE("parse_llm_candidates strips fences and prose") {
    const auto fenced = parse_llm_candidates("Here you go:\n```json\n[\"Cooking\"]\n```\nThanks.");
    REQUIRE(fenced.size() == 1);
    CHECK(fenced[0].text == "Cooking");
    const auto prose = parse_llm_candidates("Headings: [\"Cooking\", \"Food\"] as requested");
    CHECK(prose.size() == 2);
    CHECK(parse_llm_candidates("[\"\", \"  \", \"Food\"]").size() == 1);
    CHECK(parse_llm_candidates("[]").empty());
  }

  TEST_CASE("parse_llm_candidates rejects unusable replies") {
    CHECK(parse_error_code("I cannot help with that.") == Errc::MalformedLlmOutput);
    CHECK(parse_error_code("[\"unterminated") == Errc::MalformedLlmOutput);
    CHECK(parse_error_code("[1, 2]") == Errc::MalformedLlmOutput);
    CHECK(parse_error_code("[{\"label\": \"x\"}]") == Errc::MalformedLlmOutput);
    CHECK(parse_error_code("] backwards [") == Errc::MalformedLlmOutput);
  }

  TEST_CASE("parse_llm_candidates truncates long lists with a warning") {
    json arr = json::array();
    for (int i = 0; i < 13; ++i) arr.push_back("Term " + std::to_string(i));
    std::vector<std::string> warnings;
    const auto c = parse_llm_candidates(arr.dump(), &warnings);
    CHECK(c.size() == kMaxCandidates);
    CHECK(c.back().text == "Term 9");
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0] == "model returned 13 candidates; kept the first 10");
  }

  TEST_CASE("render_template substitutes once") {
    CHECK(render_template("Title: {title}", {{"title", "{summary}"}, {"summary", "x"}}) == "Title: {summary}");
    CHECK(render_template("{a}{b}", {{"a", "1"}, {"b", "2"}}) == "12");
    CHECK(render_template("JSON {\"term\": 1} and {Upper}", {}) == "JSON {\"term\": 1} and {Upper}");
    CHECK(render_template("open { only", {}) == "open { only");
    CHECK_THROWS_AS(render_template("{missing}", {}), std::invalid_argument);
  }

  TEST_CASE("default templates render with every marker supplied") {
    const auto t = PromptTemplates::defaults();
    const std::map<std::string, std::string> v = {{"title", "T"},   {"contributors", "C"}, {"summary", "S"},
                                                  {"toc", "X"},     {"previous_candidates", "P"},
                                                  {"feedback", "F"}};
    CHECK(render_template(t.initial_template, v).find("Title: T") != std::string::npos);
    CHECK(render_template(t.refine_template, v).find("Previous headings: P") != std::string::npos);
    CHECK(render_template(t.system, {}) == t.system);
  }

  TEST_CASE("render_feedback layout") {
    FeedbackContext fb;
    FeedbackEntry variant;
    variant.candidate = "Cookery";
    variant.status = ValidationStatus::VariantMatch;
    variant.authorized_form = "Cooking";
    variant.uri = "https://id.loc.gov/authorities/subjects/sh99000005";
    variant.alternatives = {{"Cooking", "https://id.loc.gov/authorities/subjects/sh99000005", 2.0 / 7.0}};
    variant.broader = {"Home economics"};
    variant.narrower = {"Cooking, Chinese", "Cooking, Japanese"};
    FeedbackEntry missing;
    missing.candidate = "zzqx";
    fb.entries = {variant, missing};

    CHECK(render_feedback(fb) ==
          "1. \"Cookery\" status=VariantMatch authorized=\"Cooking\" "
          "uri=https://id.loc.gov/authorities/subjects/sh99000005\n"
          "   alternative: \"Cooking\" score=0.29 uri=https://id.loc.gov/authorities/subjects/sh99000005\n"
          "   broader: Home economics\n"
          "   narrower: Cooking, Chinese | Cooking, Japanese\n"
          "2. \"zzqx\" status=NotFound\n");
    CHECK(render_feedback({}) == "");
  }

  TEST_CASE("MockSuggester follows its script") {
    MockSuggester mock({{"Weaving the Web", {{{"World Wide Web", 0, std::nullopt}}, {{"Internet", 0, std::nullopt}}}}});
    CHECK(mock.suggest_initial(bib())[0].text == "World Wide Web");
    CHECK(mock.refine(bib(), {})[0].text == "Internet");

    BibDescription other;
    other.title = "Unscripted";
    try {
      mock.suggest_initial(other);
      FAIL("expected UnscriptedInput");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::UnscriptedInput);
    }

    MockSuggester single({{"Weaving the Web", {{{"World Wide Web", 0, std::nullopt}}}}});
    CHECK_THROWS_AS(single.refine(bib(), {}), Error);
  }

  TEST_CASE("MockSuggester loads the corpus script") {
    const auto mock = MockSuggester::from_file((lcsh::testing::data_dir() / "mock_script.json").string());
    auto copy = mock;
    BibDescription b;
    b.title = "The Joy of Cookery";
    const auto first = copy.suggest_initial(b);
    REQUIRE_FALSE(first.empty());
    CHECK_THROWS_AS(MockSuggester::from_json(json{{"T", json::array({json::array({42})})}}), std::exception);
  }

  TEST_CASE("FeedbackKeyedMockSuggester signature") {
    FeedbackContext fb;
    fb.entries.resize(3);
    fb.entries[0].status = ValidationStatus::NotFound;
    fb.entries[1].status = ValidationStatus::ExactAuthorized;
    fb.entries[2].status = ValidationStatus::NotFound;
    CHECK(FeedbackKeyedMockSuggester::signature(fb) == "ExactAuthorized=1,NotFound=2");
    CHECK(FeedbackKeyedMockSuggester::signature({}) == "");

    FeedbackKeyedMockSuggester mock({{"weaving the web", {{"A", 0, std::nullopt}}}},
                                    {{"weaving the web", {{"ExactAuthorized=1,NotFound=2", {{"B", 0, std::nullopt}}}}}});
    CHECK(mock.refine(bib(), fb)[0].text == "B");
    CHECK_THROWS_AS(mock.refine(bib(), {}), Error);
  }

  TEST_CASE("SeededSuggester appends unseen seeds") {
    MockSuggester mock({{"Weaving the Web", {{{"World Wide Web", 0, std::nullopt}}}}});
    SeededSuggester seeded(mock, {"world wide web", "Internet"});
    const auto terms = seeded.suggest_initial(bib());
    REQUIRE(terms.size() == 2);
    CHECK(terms[1].text == "Internet");
    CHECK(terms[1].rationale == std::optional<std::string>("pre-existing term on the record"));
  }

  TEST_CASE("LlmEndpointConfig validation") {
    CHECK_NOTHROW(endpoint().validate());
    auto no_key = endpoint();
    no_key.api_key.clear();
    try {
      no_key.validate();
      FAIL("expected AuthError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::AuthError);
    }
    auto no_model = endpoint();
    no_model.model_name.clear();
    CHECK_THROWS_AS(no_model.validate(), Error);
  }

  TEST_CASE("HttpChatSuggester request shape") {
    auto transport = std::make_shared<ScriptedTransport>(
        [](const HttpRequest&) { return completion(R"([{"term": "World Wide Web", "rationale": "topic"}])"); });
    HttpChatSuggester s(endpoint(), PromptTemplates::defaults(), transport);
    const auto terms = s.suggest_initial(bib());
    REQUIRE(terms.size() == 1);
    CHECK(terms[0].rationale == std::optional<std::string>("topic"));

    REQUIRE(transport->count() == 1);
    const auto& req = transport->requests[0];
    CHECK(req.method == "POST");
    CHECK(req.url == "http://llm.invalid/v1/chat/completions");
    CHECK(req.headers.at("Authorization") == "Bearer sk-test");
    const auto body = json::parse(req.body);
    CHECK(body["model"] == "test-model");
    CHECK(body["temperature"] == 0.0);
    REQUIRE(body["messages"].size() == 2);
    CHECK(body["messages"][0]["role"] == "system");
    const std::string user = body["messages"][1]["content"];
    CHECK(user.find("Title: Weaving the Web") != std::string::npos);
    CHECK(user.find("Berners-Lee, Tim; Fischetti, Mark") != std::string::npos);
    CHECK(user.find("Table of contents: (none)") != std::string::npos);
  }

  TEST_CASE("HttpChatSuggester refine prompt carries feedback") {
    auto transport = std::make_shared<ScriptedTransport>([](const HttpRequest&) { return completion("[\"Internet\"]"); });
    HttpChatSuggester s(endpoint(), PromptTemplates::defaults(), transport);
    FeedbackContext fb;
    FeedbackEntry e;
    e.candidate = "zzqx";
    fb.entries.push_back(e);
    s.refine(bib(), fb);
    const auto body = json::parse(transport->requests[0].body);
    const std::string user = body["messages"][1]["content"];
    CHECK(user.find("Previous headings: \"zzqx\"") != std::string::npos);
    CHECK(user.find("1. \"zzqx\" status=NotFound") != std::string::npos);
  }

  TEST_CASE("HttpChatSuggester re-asks once on a malformed reply") {
    int calls = 0;
    auto transport = std::make_shared<ScriptedTransport>([&](const HttpRequest&) {
      return completion(++calls == 1 ? "Sure! Cooking and Food." : "[\"Cooking\"]");
    });
    HttpChatSuggester s(endpoint(), PromptTemplates::defaults(), transport);
    CHECK(s.suggest_initial(bib())[0].text == "Cooking");
    REQUIRE(transport->count() == 2);
    const auto second = json::parse(transport->requests[1].body)["messages"];
    REQUIRE(second.size() == 4);
    CHECK(second[2]["role"] == "assistant");
    CHECK(second[3]["content"] == PromptTemplates::defaults().format_reminder);

    auto always_bad = std::make_shared<ScriptedTransport>([](const HttpRequest&) { return completion("no"); });
    HttpChatSuggester bad(endpoint(), PromptTemplates::defaults(), always_bad);
    try {
      bad.suggest_initial(bib());
      FAIL("expected MalformedLlmOutput");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::MalformedLlmOutput);
    }
    CHECK(always_bad->count() == 2);
  }

  TEST_CASE("HttpChatSuggester retries transient failures") {
    int calls = 0;
    auto transport = std::make_shared<ScriptedTransport>([&](const HttpRequest&) {
      ++calls;
      if (calls == 1) return status_only(503);
      if (calls == 2) return status_only(429);
      return completion("[\"Food\"]");
    });
    HttpChatSuggester s(endpoint(), PromptTemplates::defaults(), transport);
    CHECK(s.suggest_initial(bib())[0].text == "Food");
    CHECK(calls == 3);

    auto down = std::make_shared<ScriptedTransport>([](const HttpRequest&) -> HttpResponse {
      throw Error(Errc::NetworkError, "connection refused");
    });
    HttpChatSuggester unreachable(endpoint(), PromptTemplates::defaults(), down);
    try {
      unreachable.suggest_initial(bib());
      FAIL("expected EndpointError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::EndpointError);
    }
    CHECK(down->count() == 3);
  }

  TEST_CASE("HttpChatSuggester maps auth and client errors") {
    auto unauthorized = std::make_shared<ScriptedTransport>([](const HttpRequest&) { return status_only(401); });
    HttpChatSuggester s(endpoint(), PromptTemplates::defaults(), unauthorized);
    try {
      s.suggest_initial(bib());
      FAIL("expected AuthError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::AuthError);
    }
    CHECK(unauthorized->count() == 1);

    auto bad_request = std::make_shared<ScriptedTransport>([](const HttpRequest&) { return status_only(400); });
    HttpChatSuggester s2(endpoint(), PromptTemplates::defaults(), bad_request);
    try {
      s2.suggest_initial(bib());
      FAIL("expected EndpointError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::EndpointError);
    }
    CHECK(bad_request->count() == 1);

    auto odd_shape = std::make_shared<ScriptedTransport>([](const HttpRequest&) {
      HttpResponse r;
      r.status = 200;
      r.body = "{\"choices\": []}";
      return r;
    });
    HttpChatSuggester s3(endpoint(), PromptTemplates::defaults(), odd_shape);
    CHECK_THROWS_AS(s3.suggest_initial(bib()), Error);
  }

  TEST_CASE("HttpChatSuggester records truncation warnings") {
    json arr = json::array();
    for (int i = 0; i < 12; ++i) arr.push_back("T" + std::to_string(i));
    auto transport = std::make_shared<ScriptedTransport>([&](const HttpRequest&) { return completion(arr.dump()); });
    HttpChatSuggester s(endpoint(), PromptTemplates::defaults(), transport);
    CHECK(s.suggest_initial(bib()).size() == 10);
    CHECK(s.warnings().size() == 1);
  }
}
