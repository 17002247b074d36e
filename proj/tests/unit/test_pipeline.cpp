// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsh/errors.hpp"
#include "lcsh/pipeline.hpp"
#include "lcsh/suggesters.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <set>

using namespace lcsh;
using lcsh::testing::FailOnUseTransport;

namespace {

struct Env {
  std::shared_ptr<FailOnUseTransport> transport = std::make_shared<FailOnUseTransport>();
  loc::LocClient client{lcsh::testing::replay_config(), transport};
  SessionConfig cfg;
};

std::vector<CandidateTerm> terms(std::initializer_list<const char*> texts) {
  std::vector<CandidateTerm> out;
  for (auto t : texts) out.push_back({t, 0, std::nullopt});
  return out;
}

/// Counts suggester calls around another suggester.
class Counting : public Suggester {
 public:
  explicit Counting(Suggester& inner) : inner_(inner) {}
  std::vector<CandidateTerm> suggest_initial(const BibDescription& bib) override {
    ++initial;
    return inner_.suggest_initial(bib);
  }
  std::vector<CandidateTerm> refine(const BibDescription& bib, const FeedbackContext& fb) override {
    ++refines;
    last_feedback = fb;
    return inner_.refine(bib, fb);
  }
  int initial = 0;
  int refines = 0;
  FeedbackContext last_feedback;

 private:
  Suggester& inner_;
};

class Throwing : public Suggester {
 public:
  std::vector<CandidateTerm> suggest_initial(const BibDescription&) override {
    throw std::runtime_error("model unavailable");
  }
  std::vector<CandidateTerm> refine(const BibDescription&, const FeedbackContext&) override {
    return {};
  }
};

MockSuggester script(const std::string& title, std::vector<std::vector<CandidateTerm>> rounds) {
  return MockSuggester({{title, std::move(rounds)}});
}

BibDescription bib(const std::string& title) {
  BibDescription b;
  b.title = title;
  return b;
}

ValidationOutcome resolved(const std::string& text, int round, const std::string& uri,
                           const std::string& label, double score,
                           ValidationStatus status = ValidationStatus::ExactAuthorized) {
  ValidationOutcome o;
  o.candidate = {text, round, std::nullopt};
  o.status = status;
  o.resolved_uri = uri;
  o.authorized_label = label;
  o.matches.push_back({uri, label, label, {score, score, score}});
  return o;
}

ValidationOutcome unresolved(const std::string& text, int round, ValidationStatus status) {
  ValidationOutcome o;
  o.candidate = {text, round, std::nullopt};
  o.status = status;
  return o;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("validate_candidates on fixtures") {
    Env env;
    const auto out = validate_candidates(
        terms({"World Wide Web", "Cookery", "zzqx-nonsense-term-000", "Moving-pictures", "Artifical intelligence"}),
        env.client, env.cfg);
    REQUIRE(out.size() == 5);

    CHECK(out[0].status == ValidationStatus::ExactAuthorized);
    CHECK(out[0].resolved_uri == std::optional<std::string>("https://id.loc.gov/authorities/subjects/sh99000002"));

    CHECK(out[1].status == ValidationStatus::VariantMatch);
    CHECK(out[1].authorized_label == std::optional<std::string>("Cooking"));
    CHECK(out[1].resolved_uri.has_value());

    CHECK(out[2].status == ValidationStatus::NotFound);
    CHECK(out[2].matches.empty());
    CHECK_FALSE(out[2].resolved_uri.has_value());

    CHECK(out[3].status == ValidationStatus::Deprecated);
    CHECK(out[3].resolved_uri.has_value());

    CHECK(out[4].status == ValidationStatus::PartialMatch);
    REQUIRE_FALSE(out[4].matches.empty());
    CHECK(out[4].matches[0].authorized_label == "Artificial intelligence");
    CHECK(out[4].best_score() >= env.cfg.partial_threshold);
    CHECK(out[4].best_score() < env.cfg.accept_threshold);
    CHECK(env.transport->uses == 0);
  }

  TEST_CASE("duplicate candidates share one lookup and keep input order") {
    Env env;
    auto in = terms({"Cooking", "  cooking ", "World Wide Web"});
    in[1].round = 1;
    const auto out = validate_candidates(in, env.client, env.cfg);
    REQUIRE(out.size() == 3);
    CHECK(out[0].status == ValidationStatus::ExactAuthorized);
    CHECK(out[1].status == out[0].status);
    CHECK(out[1].candidate.text == "  cooking ");
    CHECK(out[1].candidate.round == 1);
    CHECK(out[2].candidate.text == "World Wide Web");
  }

  TEST_CASE("lookup failures propagate unless degradable") {
    Env env;
    auto in = terms({"World Wide Web", "a term with no fixture"});
    try {
      validate_candidates(in, env.client, env.cfg);
      FAIL("expected ReplayMiss");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ReplayMiss);
    }
    env.cfg.degradable_lookups = true;
    const auto out = validate_candidates(in, env.client, env.cfg);
    CHECK(out[0].status == ValidationStatus::ExactAuthorized);
    CHECK(out[1].status == ValidationStatus::NotFound);
    REQUIRE(out[1].error.has_value());
    CHECK(out[1].error->find("ReplayMiss") == 0);
  }

  TEST_CASE("build_feedback") {
    Env env;
    const auto all_exact = validate_candidates(terms({"World Wide Web", "Internet"}), env.client, env.cfg);
    const auto fb = build_feedback(all_exact, 0, env.client);
    REQUIRE(fb.entries.size() == 2);
    for (const auto& e : fb.entries) {
      CHECK(e.status == ValidationStatus::ExactAuthorized);
      CHECK(e.alternatives.empty());
      CHECK(e.broader.empty());
    }

    const auto mixed = validate_candidates(terms({"Food habits--Japan", "Cookery"}), env.client, env.cfg);
    const auto fb2 = build_feedback(mixed, 0, env.client);
    const auto& partial = fb2.entries[0];
    CHECK(partial.status == ValidationStatus::PartialMatch);
    REQUIRE_FALSE(partial.alternatives.empty());
    CHECK(partial.alternatives.size() <= 3);
    for (std::size_t i = 0; i < partial.alternatives.size(); ++i) {
      CHECK(partial.alternatives[i].uri == mixed[0].matches[i].uri);
      if (i > 0) CHECK(partial.alternatives[i - 1].score >= partial.alternatives[i].score);
    }
    const auto& variant = fb2.entries[1];
    CHECK(variant.authorized_form == std::optional<std::string>("Cooking"));
    CHECK(variant.broader == std::vector<std::string>{"Home economics"});
    CHECK(variant.narrower.size() <= 3);
    CHECK_FALSE(variant.narrower.empty());

    CHECK_THROWS_AS(build_feedback({}, 0, env.client), std::invalid_argument);
  }

  TEST_CASE("finalize truncates by round, then score, then label") {
    SessionConfig cfg;
    std::vector<std::vector<ValidationOutcome>> rounds = {
        {resolved("a", 0, "u:a", "Alpha", 1.0), resolved("b", 0, "u:b", "Beta", 1.0),
         resolved("c", 0, "u:c", "Gamma", 0.6, ValidationStatus::VariantMatch)},
        {resolved("d", 1, "u:d", "Delta", 1.0), resolved("e", 1, "u:e", "Epsilon", 1.0)}};
    const auto set = finalize(rounds, cfg);
    REQUIRE(set.controlled.size() == 4);
    CHECK(set.controlled[0].heading == "Delta");
    CHECK(set.controlled[1].heading == "Epsilon");
    CHECK(set.controlled[2].heading == "Alpha");
    CHECK(set.controlled[3].heading == "Beta");
    CHECK(set.rounds_used == 2);
    CHECK(set.uncontrolled.empty());
  }

  TEST_CASE("finalize deduplicates by URI with the latest round winning") {
    SessionConfig cfg;
    std::vector<std::vector<ValidationOutcome>> rounds = {
        {resolved("Cookery", 0, "u:cooking", "Cooking", 0.28, ValidationStatus::VariantMatch)},
        {resolved("Cooking", 1, "u:cooking", "Cooking", 1.0)}};
    const auto set = finalize(rounds, cfg);
    REQUIRE(set.controlled.size() == 1);
    CHECK(set.controlled[0].justification.find("\"Cooking\" in round 1") != std::string::npos);
    CHECK(set.uncontrolled.empty());
  }

  TEST_CASE("finalize routes deprecated and unresolved texts to uncontrolled") {
    SessionConfig cfg;
    auto dep = resolved("Moving-pictures", 0, "u:mp", "Moving-pictures", 1.0, ValidationStatus::Deprecated);
    std::vector<std::vector<ValidationOutcome>> rounds = {
        {dep, unresolved("Kitchen  Wizardry", 0, ValidationStatus::NotFound),
         unresolved("Food habits--Japan", 0, ValidationStatus::PartialMatch)}};
    const auto set = finalize(rounds, cfg);
    CHECK(set.controlled.empty());
    CHECK(set.uncontrolled ==
          std::vector<std::string>{"moving-pictures", "kitchen wizardry", "food habits--japan"});

    cfg.max_uncontrolled = 1;
    CHECK(finalize(rounds, cfg).uncontrolled.size() == 1);
  }

  TEST_CASE("justification cites rationale and status") {
    SessionConfig cfg;
    auto o = resolved("Cookery", 0, "u:cooking", "Cooking", 0.28, ValidationStatus::VariantMatch);
    o.candidate.rationale = "the book teaches cooking";
    const auto set = finalize({{o}}, cfg);
    CHECK(set.controlled[0].justification ==
          "Suggested as \"Cookery\" in round 0: the book teaches cooking. Validated against LCSH as "
          "VariantMatch; replaced with the authorized form \"Cooking\".");
  }

  TEST_CASE("run_session: exact hit ends after one round") {
    Env env;
    auto mock = script("Weaving the Web", {{{"World Wide Web", 0, std::nullopt}}});
    Counting counting(mock);
    const auto set = run_session(bib("Weaving the Web"), counting, env.client, env.cfg);
    REQUIRE(set.controlled.size() == 1);
    CHECK(set.controlled[0].heading == "World Wide Web");
    CHECK(set.rounds_used == 1);
    CHECK(set.uncontrolled.empty());
    CHECK(counting.initial == 1);
    CHECK(counting.refines == 0);
  }

  TEST_CASE("run_session: variant is replaced by its authorized form") {
    Env env;
    auto mock = script("The Joy of Cookery", {{{"Cookery", 0, std::nullopt}}});
    const auto set = run_session(bib("The Joy of Cookery"), mock, env.client, env.cfg);
    REQUIRE(set.controlled.size() == 1);
    CHECK(set.controlled[0].heading == "Cooking");
    CHECK(set.controlled[0].uri == "https://id.loc.gov/authorities/subjects/sh99000005");
    CHECK(set.uncontrolled.empty());
  }

  TEST_CASE("run_session: an unresolvable candidate exhausts the rounds") {
    Env env;
    const CandidateTerm nonsense{"zzqx-nonsense-term-000", 0, std::nullopt};
    FeedbackKeyedMockSuggester mock({{"Nothing", {nonsense}}}, {{"Nothing", {{"*", {nonsense}}}}});
    Counting counting(mock);
    const auto set = run_session(bib("Nothing"), counting, env.client, env.cfg);
    CHECK(set.controlled.empty());
    CHECK(set.uncontrolled == std::vector<std::string>{"zzqx-nonsense-term-000"});
    CHECK(set.rounds_used == env.cfg.max_rounds);
    CHECK(counting.refines == 1);
    REQUIRE(counting.last_feedback.entries.size() == 1);
    CHECK(counting.last_feedback.entries[0].status == ValidationStatus::NotFound);
  }

  TEST_CASE("run_session: refinement sees feedback and improves the result") {
    Env env;
    FeedbackKeyedMockSuggester mock(
        {{"Machine Minds", terms({"Artifical intelligence", "Machine learning"})}},
        {{"Machine Minds",
          {{"ExactAuthorized=1,PartialMatch=1", terms({"Artificial intelligence"})},
           {"*", terms({"zzqx-nonsense-term-000"})}}}});
    const auto set = run_session(bib("Machine Minds"), mock, env.client, env.cfg);
    REQUIRE(set.controlled.size() == 2);
    CHECK(set.controlled[0].heading == "Artificial intelligence");
    CHECK(set.controlled[1].heading == "Machine learning");
    CHECK(set.uncontrolled == std::vector<std::string>{"artifical intelligence"});
    CHECK(set.rounds_used == 2);
  }

  TEST_CASE("run_session: max_rounds 1 never refines") {
    Env env;
    env.cfg.max_rounds = 1;
    auto mock = script("T", {{{"Kitchen wizardry", 0, std::nullopt}}, {{"Cooking", 1, std::nullopt}}});
    Counting counting(mock);
    const auto set = run_session(bib("T"), counting, env.client, env.cfg);
    CHECK(set.rounds_used == 1);
    CHECK(counting.refines == 0);
  }

  TEST_CASE("run_session: errors") {
    Env env;
    auto empty = script("Empty", {{}});
    try {
      run_session(bib("Empty"), empty, env.client, env.cfg);
      FAIL("expected EmptySuggestion");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::EmptySuggestion);
    }

    Throwing throwing;
    try {
      run_session(bib("Any"), throwing, env.client, env.cfg);
      FAIL("expected SuggesterError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::SuggesterError);
    }

    auto mock = script("Any", {{{"World Wide Web", 0, std::nullopt}}});
    try {
      run_session(bib("   "), mock, env.client, env.cfg);
      FAIL("expected InvalidBib");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InvalidBib);
      CHECK(std::string(e.what()).find("invalid bib") == 0);
    }

    SessionConfig bad;
    bad.max_rounds = 0;
    CHECK_THROWS_AS(run_session(bib("Any"), mock, env.client, bad), Error);
  }

  TEST_CASE("run_session: more than ten candidates are capped") {
    Env env;
    std::vector<CandidateTerm> many;
    for (const char* t : {"World Wide Web", "Internet", "Hypertext systems", "Cooking", "Cookbooks",
                          "Home economics", "Food", "Food habits", "Japan", "China--History",
                          "Libraries", "Metadata"}) {
      many.push_back({t, 0, std::nullopt});
    }
    auto mock = script("Many", {many});
    const auto set = run_session(bib("Many"), mock, env.client, env.cfg);
    REQUIRE(set.audit.size() == 1);
    CHECK(set.audit[0].size() == kMaxCandidates);
    CHECK(set.controlled.size() == 4);
  }

  TEST_CASE("session properties over the scripted corpus") {
    Env env;
    const auto mock = MockSuggester::from_file((lcsh::testing::data_dir() / "mock_script.json").string());
    std::istringstream corpus(lcsh::testing::read_text(lcsh::testing::data_dir() / "corpus10.jsonl"));
    std::string line;
    int records = 0;
    while (std::getline(corpus, line)) {
      const auto doc = nlohmann::json::parse(line);
      MockSuggester a = mock, b = mock;
      const auto first = run_session(bib(doc["title"]), a, env.client, env.cfg);
      const auto second = run_session(bib(doc["title"]), b, env.client, env.cfg);
      CHECK(first == second);
      CHECK(first.rounds_used >= 1);
      CHECK(first.rounds_used <= env.cfg.max_rounds);
      CHECK(first.controlled.size() <= 4);

      std::set<std::string> seen_uris;
      for (const auto& round : first.audit) {
        for (const auto& o : round) {
          if (o.resolved_uri) seen_uris.insert(*o.resolved_uri);
          for (const auto& m : o.matches) seen_uris.insert(m.uri);
        }
      }
      std::set<std::string> controlled_texts;
      for (const auto& c : first.controlled) {
        CHECK(seen_uris.count(c.uri) == 1);
        CHECK(env.client.fetch_authority(c.uri).authorized_label == c.heading);
        controlled_texts.insert(normalize_label(c.heading));
      }
      // Every candidate lands in exactly one place.
      for (const auto& round : first.audit) {
        for (const auto& o : round) {
          const auto text = normalize_label(o.candidate.text);
          const bool uncontrolled = std::find(first.uncontrolled.begin(), first.uncontrolled.end(),
                                              text) != first.uncontrolled.end();
          bool controlled = false;
          if (o.resolved()) {
            for (const auto& c : first.controlled) controlled |= c.uri == *o.resolved_uri;
          }
          CHECK_FALSE((controlled && uncontrolled));
          if (!o.resolved()) CHECK((uncontrolled || first.uncontrolled.size() == 5));
        }
      }
      ++records;
    }
    CHECK(records == 10);
    CHECK(env.transport->uses == 0);
  }
}
