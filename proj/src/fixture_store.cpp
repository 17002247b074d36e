// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsh/fixture_store.hpp"

#include "lcsh/errors.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace lcsh {

using nlohmann::json;

namespace {

json descriptor_json(const RequestDescriptor& r) {
  json query = json::array();
  for (const auto& [k, v] : r.query) query.push_back(json::array({k, v}));
  return {{"method", r.method}, {"url", r.url}, {"query", query}};
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace

std::string RequestDescriptor::canonical() const { return descriptor_json(*this).dump(); }

std::string RequestDescriptor::key() const { return sha256_hex(canonical()); }

const std::vector<std::string>& recorded_header_names() {
  static const std::vector<std::string> names = {"content-type", "location", "x-preflabel",
                                                 "x-preflabel-encoded", "x-uri"};
  return names;
}

std::string serialize_exchange(const Exchange& e) {
  json headers = json::object();
  for (const auto& [k, v] : e.response.headers) headers[k] = v;
  json doc = {
      {"request", descriptor_json(e.request)},
      {"response", {{"status", e.response.status}, {"headers", headers}, {"body", e.response.body}}},
      {"recorded_at", e.recorded_at},
  };
  return doc.dump(2) + "\n";
}

Exchange parse_exchange(std::string_view text) {
  try {
    json doc = json::parse(text);
    Exchange e;
    const auto& req = doc.at("request");
    e.request.method = req.at("method").get<std::string>();
    e.request.url = req.at("url").get<std::string>();
    for (const auto& pair : req.at("query")) {
      e.request.query.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
    }
    const auto& resp = doc.at("response");
    e.response.status = resp.at("status").get<int>();
    for (const auto& [k, v] : resp.at("headers").items()) {
      e.response.headers[to_lower_ascii(k)] = v.get<std::string>();
    }
    e.response.body = resp.at("body").get<std::string>();
    e.recorded_at = doc.value("recorded_at", "");
    return e;
  } catch (const json::exception& ex) {
    throw Error(Errc::MalformedResponse, std::string("bad fixture document: ") + ex.what());
  }
}

FixtureStore::FixtureStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<Exchange> FixtureStore::load(const RequestDescriptor& request) const {
  auto path = dir_ / (request.key() + ".json");
  std::lock_guard lock(mutex_);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  Exchange e = parse_exchange(buf.str());
  if (!(e.request == request)) return std::nullopt;
  return e;
}

void FixtureStore::save(const Exchange& exchange) {
  std::lock_guard lock(mutex_);
  std::filesystem::create_directories(dir_);
  auto path = dir_ / (exchange.request.key() + ".json");
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << serialize_exchange(exchange);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::filesystem::path> FixtureStore::files() const {
  std::vector<std::filesystem::path> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir_, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace lcsh
