// Copyright 2026 The lcsh-loop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lcsh {

enum class Errc {
  // heading parsing
  EmptyHeading,
  EmptyComponent,
  // loc-client
  EmptyQuery,
  ForeignUri,
  NetworkError,
  ServiceError,
  MalformedResponse,
  ReplayMiss,
  // configuration and inputs
  InvalidConfig,
  InvalidBib,
  // pipeline / suggesters
  SuggesterError,
  EmptySuggestion,
  UnscriptedInput,
  EndpointError,
  MalformedLlmOutput,
  AuthError,
};

std::string_view errc_name(Errc code) noexcept;

/// True for the failures that originate in the LOC lookup path.
constexpr bool is_lookup_error(Errc code) noexcept {
  switch (code) {
    case Errc::NetworkError:
    case Errc::ServiceError:
    case Errc::MalformedResponse:
    case Errc::ReplayMiss:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail, int status = 0)
      : std::runtime_error(detail), code_(code), status_(status) {}

  Errc code() const noexcept { return code_; }
  /// HTTP status for ServiceError, 0 otherwise.
  int status() const noexcept { return status_; }

 private:
  Errc code_;
  int status_;
};

}  // namespace lcsh
