// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsh/errors.hpp"
#include "lcsh/fixture_store.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace lcsh;
namespace fs = std::filesystem;

TEST_SUITE("fixture_store") {
  TEST_CASE("request keys are SHA-256 of the canonical descriptor") {
    // Frozen from an independent hashlib computation over the same canonical
    // JSON text.
    RequestDescriptor label{"GET", "/authorities/subjects/label/Metadata", {}};
    CHECK(label.canonical() == R"({"method":"GET","query":[],"url":"/authorities/subjects/label/Metadata"})");
    CHECK(label.key() == "04c51a18a182f8cb31c6dae8ac681f098b4f84baf8ce926c023ca66efd4dae24");

    RequestDescriptor suggest{"GET", "/authorities/subjects/suggest2", {{"q", "World Wide Web"}, {"count", "10"}}};
    CHECK(suggest.key() == "3ffd04f387e4afb292a738269112af56ba013b375822f65548fa09d45fb4aa32");

    RequestDescriptor reordered{"GET", "/authorities/subjects/suggest2", {{"count", "10"}, {"q", "World Wide Web"}}};
    CHECK(reordered.key() != suggest.key());
  }

  TEST_CASE("exchanges round trip through serialization") {
    Exchange e;
    e.request = {"GET", "/authorities/subjects/label/Caf%C3%A9s", {}};
    e.response.status = 302;
    e.response.headers = {{"x-uri", "http://id.loc.gov/authorities/subjects/sh1"}, {"x-preflabel", "Cafés"}};
    e.response.body = "Found";
    e.recorded_at = "2026-01-01T00:00:00Z";
    const auto text = serialize_exchange(e);
    CHECK(text.back() == '\n');
    const auto back = parse_exchange(text);
    CHECK(back.request == e.request);
    CHECK(back.response == e.response);
    CHECK(back.recorded_at == e.recorded_at);
    CHECK(serialize_exchange(back) == text);
  }

  TEST_CASE("malformed exchange documents are rejected") {
    for (const char* bad : {"", "[]", "{\"request\":{}}", "not json"}) {
      try {
        parse_exchange(bad);
        FAIL("expected MalformedResponse");
      } catch (const Error& e) {
        CHECK(e.code() == Errc::MalformedResponse);
      }
    }
  }

  TEST_CASE("save then load, keyed by request") {
    const auto dir = lcsh::testing::temp_dir("store");
    FixtureStore store(dir);
    Exchange e;
    e.request = {"GET", "/x", {{"q", "a"}}};
    e.response.status = 200;
    e.response.body = "{}";
    e.recorded_at = "2026-01-01T00:00:00Z";
    CHECK_FALSE(store.load(e.request).has_value());
    store.save(e);
    auto loaded = store.load(e.request);
    REQUIRE(loaded.has_value());
    CHECK(loaded->response == e.response);
    REQUIRE(store.files().size() == 1);
    CHECK(store.files()[0].filename() == e.request.key() + ".json");
    fs::remove_all(dir);
  }

  TEST_CASE("committed fixtures re-serialize byte-identically") {
    FixtureStore store(lcsh::testing::fixture_dir());
    const auto files = store.files();
    CHECK(files.size() > 25);
    for (const auto& f : files) {
      const auto text = lcsh::testing::read_text(f);
      const auto e = parse_exchange(text);
      CHECK(serialize_exchange(e) == text);
      CHECK(f.filename().string() == e.request.key() + ".json");
    }
  }
}
